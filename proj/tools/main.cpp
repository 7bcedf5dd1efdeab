// tools/main.cpp placeholder; subcommands land with the modules they drive.
#include <cstdio>

int main() {
  std::fprintf(stderr, "avdiar: not wired up yet\n");
  return 2;
}
