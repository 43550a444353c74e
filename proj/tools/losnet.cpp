// SPDX-License-Identifier: Apache-2.0
#include <iostream>
#include <string>
#include <vector>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

#include "losnet/cli/cli.hpp"

int main(int argc, char** argv) {
#if defined(__GLIBC__)
  // Training frees and reallocates the same large buffers every batch; keep
  // them in the heap instead of returning them to the kernel each time.
  mallopt(M_MMAP_THRESHOLD, 1 << 30);
  mallopt(M_TRIM_THRESHOLD, 1 << 30);
#endif
  std::vector<std::string> args(argv + 1, argv + argc);
  return losnet::cli::run(args, std::cout, std::cerr);
}
