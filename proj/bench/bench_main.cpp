// Compares the serial reference kernels against their OpenMP counterparts:
// raw hash throughput, nonce search, and calibration batches.

#include <chrono>
#include <cstdio>
#include <random>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "blocklite/calibration.hpp"
#include "blocklite/puzzle.hpp"
#include "blocklite/sha256.hpp"

using namespace blocklite;
using Clock = std::chrono::steady_clock;

namespace {

double secondsSince(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::vector<uint8_t> randomHeader(uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<uint8_t> h(64);
    for (auto& b : h) b = static_cast<uint8_t>(rng());
    return h;
}

double hashRateSerial(uint64_t hashes) {
    auto header = randomHeader(1);
    Sha256Hasher hasher;
    std::vector<uint8_t> buf = header;
    buf.resize(header.size() + 20);
    uint8_t digest[32];
    volatile uint8_t sink = 0;
    auto t0 = Clock::now();
    for (uint64_t n = 0; n < hashes; ++n) {
        int len = snprintf(reinterpret_cast<char*>(buf.data() + header.size()), 20, "%llu",
                           static_cast<unsigned long long>(n));
        hasher.digest(buf.data(), header.size() + static_cast<size_t>(len), digest);
        sink ^= digest[0];
    }
    (void)sink;
    return static_cast<double>(hashes) / secondsSince(t0);
}

double hashRateParallel(uint64_t hashes) {
    auto header = randomHeader(1);
    auto t0 = Clock::now();
#pragma omp parallel
    {
        Sha256Hasher hasher;
        std::vector<uint8_t> buf = header;
        buf.resize(header.size() + 20);
        uint8_t digest[32];
        volatile uint8_t sink = 0;
#pragma omp for
        for (int64_t n = 0; n < static_cast<int64_t>(hashes); ++n) {
            int len = snprintf(reinterpret_cast<char*>(buf.data() + header.size()), 20, "%lld",
                               static_cast<long long>(n));
            hasher.digest(buf.data(), header.size() + static_cast<size_t>(len), digest);
            sink ^= digest[0];
        }
        (void)sink;
    }
    return static_cast<double>(hashes) / secondsSince(t0);
}

void benchSolve(const char* difficulty, int rounds) {
    Difficulty d = parseDifficulty(difficulty);
    double serialS = 0, parallelS = 0;
    uint64_t attempts = 0;
    for (int i = 0; i < rounds; ++i) {
        auto header = randomHeader(100 + static_cast<uint64_t>(i));
        auto t0 = Clock::now();
        auto s = solveSerial(header, d);
        serialS += secondsSince(t0);
        t0 = Clock::now();
        auto p = solveParallel(header, d);
        parallelS += secondsSince(t0);
        if (!s || !p || s->nonce != p->nonce) {
            printf("MISMATCH at %s round %d\n", difficulty, i);
            return;
        }
        attempts += s->attempts;
    }
    printf("solve %-5s  rounds=%-3d avg_attempts=%-9llu serial=%.3fs parallel=%.3fs speedup=%.2fx\n",
           difficulty, rounds, static_cast<unsigned long long>(attempts / rounds), serialS,
           parallelS, serialS / parallelS);
}

void benchCalibrate(const char* difficulty, uint64_t samples) {
    std::vector<Difficulty> range{parseDifficulty(difficulty)};
    CalibrateOptions opt;
    opt.samplesPerDifficulty = samples;
    opt.seed = 7;

    opt.threads = 1;
    auto t0 = Clock::now();
    calibrate(range, opt);
    double serial = secondsSince(t0);

    opt.threads = 0;
    t0 = Clock::now();
    calibrate(range, opt);
    double parallel = secondsSince(t0);

    printf("calibrate %-5s samples=%-6llu serial=%.3fs parallel=%.3fs speedup=%.2fx\n",
           difficulty, static_cast<unsigned long long>(samples), serial, parallel,
           serial / parallel);
}

} // namespace

int main() {
#ifdef _OPENMP
    printf("OpenMP workers: %d\n", omp_get_max_threads());
#else
    printf("OpenMP not enabled; parallel paths fall back to serial\n");
#endif

    const uint64_t hashes = 2000000;
    double hs = hashRateSerial(hashes);
    double hp = hashRateParallel(hashes);
    printf("hash throughput: serial=%.2f MH/s parallel=%.2f MH/s speedup=%.2fx\n", hs / 1e6,
           hp / 1e6, hp / hs);

    benchSolve("2.0", 40);
    benchSolve("3.0", 12);
    benchSolve("4.0", 3);

    benchCalibrate("1.0", 20000);
    benchCalibrate("2.0", 2000);
    return 0;
}
