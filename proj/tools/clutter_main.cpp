#include <cstdio>

int main() {
  std::puts("clutter: subcommands not wired up yet");
  return 0;
}
