// Benchmark for the local-entropy filter variants. Informational; the
// acceptance suite checks bitwise equivalence, not speed.

#include <chrono>
#include <cstdio>

#include "medgrad/entropy.hpp"
#include "medgrad/rng.hpp"

using namespace medgrad;
using clock_type = std::chrono::steady_clock;

int main(int argc, char** argv) {
    const int size = argc > 1 ? std::atoi(argv[1]) : 256;
    const int reps = argc > 2 ? std::atoi(argv[2]) : 5;

    Rng rng(7);
    std::vector<float> gray(static_cast<std::size_t>(size) * size);
    for (auto& v : gray) v = rng.uniform_float();

    std::printf("%dx%d random image, %d reps, 32 bins\n", size, size, reps);
    for (int radius : {1, 3, 5, 9}) {
        auto t0 = clock_type::now();
        for (int r = 0; r < reps; ++r) local_entropy_ref(gray, size, size, radius, 32);
        auto t1 = clock_type::now();
        for (int r = 0; r < reps; ++r) local_entropy_fast(gray, size, size, radius, 32);
        auto t2 = clock_type::now();
        const double ref_ms = std::chrono::duration<double, std::milli>(t1 - t0).count() / reps;
        const double fast_ms = std::chrono::duration<double, std::milli>(t2 - t1).count() / reps;
        std::printf("radius %d: ref %8.2f ms   fast %8.2f ms   speedup %.2fx\n", radius, ref_ms,
                    fast_ms, ref_ms / fast_ms);
    }
    return 0;
}
