#include <benchmark/benchmark.h>

// the stock benchmark_main static library ships LTO bytecode our toolchain
// cannot read, so the entry point lives here
BENCHMARK_MAIN();
