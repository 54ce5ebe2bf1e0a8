#include <cstdio>

int main() {
  std::puts("prpose: subcommands not wired up yet");
  return 1;
}
