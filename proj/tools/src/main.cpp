#include <cstdio>

#include "mvrecon/types.hpp"

int main(int argc, char** argv) {
  (void)argc;
  (void)argv;
  std::fprintf(stderr, "mvrecon: subcommands not wired up yet\n");
  return static_cast<int>(mvr::ErrorCode::config);
}
