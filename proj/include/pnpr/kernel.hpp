#pragma once

// Blur kernels (PSFs) and their on-disk text format:
//   first line "kh kw", then kh rows of kw whitespace-separated reals.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "pnpr/errors.hpp"
#include "pnpr/image.hpp"

namespace pnpr {

struct Kernel {
    int kh = 0;  // odd
    int kw = 0;  // odd
    std::vector<double> weights;  // row-major, kh*kw

    double& at(int u, int v) { return weights[static_cast<size_t>(u) * kw + v]; }
    double at(int u, int v) const { return weights[static_cast<size_t>(u) * kw + v]; }

    double sum() const {
        double s = 0.0;
        for (double w : weights) s += w;
        return s;
    }

    void validate(const char* where) const {
        if (kh <= 0 || kw <= 0 || kh % 2 == 0 || kw % 2 == 0)
            throw DataError(std::string(where) + ": kernel dimensions must be odd, got " +
                            std::to_string(kh) + "x" + std::to_string(kw));
        if (weights.size() != static_cast<size_t>(kh) * kw)
            throw DataError(std::string(where) + ": kernel weight count mismatch");
        double s = 0.0;
        for (double w : weights) {
            if (!std::isfinite(w)) throw DataError(std::string(where) + ": non-finite kernel weight");
            s += w;
        }
        if (!(s > 0.0)) throw DataError(std::string(where) + ": kernel weights must sum to > 0");
    }
};

inline Kernel delta_kernel() {
    Kernel k;
    k.kh = k.kw = 1;
    k.weights = {1.0};
    return k;
}

// Samples of exp(-(u^2+v^2)/(2 std^2)) on a size x size grid, normalized to sum 1.
inline Kernel make_gaussian_kernel(int size, double stddev) {
    if (size <= 0 || size % 2 == 0)
        throw DataError("make_gaussian_kernel: size must be odd and positive");
    if (!(stddev > 0.0)) throw DataError("make_gaussian_kernel: std must be > 0");
    Kernel k;
    k.kh = k.kw = size;
    k.weights.resize(static_cast<size_t>(size) * size);
    const int c = size / 2;
    double sum = 0.0;
    for (int u = 0; u < size; ++u)
        for (int v = 0; v < size; ++v) {
            const double du = u - c, dv = v - c;
            const double w = std::exp(-(du * du + dv * dv) / (2.0 * stddev * stddev));
            k.at(u, v) = w;
            sum += w;
        }
    for (double& w : k.weights) w /= sum;
    return k;
}

// Separable windowed-cubic low-pass of size 4s+1 approximating bicubic
// downscaling by factor s. Used to synthesize bicubic-degraded SISR inputs.
inline Kernel make_bicubic_kernel(int s) {
    if (s < 1) throw DataError("make_bicubic_kernel: scale must be >= 1");
    const int size = 4 * s + 1;
    const int c = size / 2;
    std::vector<double> tap(size);
    double tsum = 0.0;
    for (int u = 0; u < size; ++u) {
        tap[u] = detail::cubic_weight((u - c) / static_cast<double>(s));
        tsum += tap[u];
    }
    for (double& t : tap) t /= tsum;
    Kernel k;
    k.kh = k.kw = size;
    k.weights.resize(static_cast<size_t>(size) * size);
    for (int u = 0; u < size; ++u)
        for (int v = 0; v < size; ++v) k.at(u, v) = tap[u] * tap[v];
    return k;
}

inline Kernel load_kernel(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("load_kernel: cannot open " + path);
    Kernel k;
    if (!(in >> k.kh >> k.kw)) throw DataError("load_kernel: bad header in " + path);
    if (k.kh <= 0 || k.kw <= 0 || k.kh > 4096 || k.kw > 4096)
        throw DataError("load_kernel: implausible kernel size in " + path);
    k.weights.resize(static_cast<size_t>(k.kh) * k.kw);
    for (double& w : k.weights)
        if (!(in >> w)) throw DataError("load_kernel: truncated kernel data in " + path);
    k.validate("load_kernel");
    return k;
}

inline void save_kernel(const Kernel& k, const std::string& path) {
    k.validate("save_kernel");
    std::ofstream out(path);
    if (!out) throw DataError("save_kernel: cannot write " + path);
    out << k.kh << " " << k.kw << "\n";
    char buf[32];
    for (int u = 0; u < k.kh; ++u) {
        for (int v = 0; v < k.kw; ++v) {
            std::snprintf(buf, sizeof(buf), "%.17g", k.at(u, v));
            out << buf << (v + 1 == k.kw ? "" : " ");
        }
        out << "\n";
    }
    if (!out) throw DataError("save_kernel: write failure on " + path);
}

// FNV-1a over dimensions and the IEEE bit patterns of the weights.
// Stable content identity for degradation manifests.
inline std::string kernel_hash(const Kernel& k) {
    uint64_t h = 0xcbf29ce484222325ULL;
    auto mix = [&h](const void* p, size_t n) {
        const unsigned char* b = static_cast<const unsigned char*>(p);
        for (size_t i = 0; i < n; ++i) {
            h ^= b[i];
            h *= 0x100000001b3ULL;
        }
    };
    const int32_t dims[2] = {k.kh, k.kw};
    mix(dims, sizeof(dims));
    for (double w : k.weights) {
        uint64_t bits;
        static_assert(sizeof(bits) == sizeof(w));
        std::memcpy(&bits, &w, sizeof(bits));
        mix(&bits, sizeof(bits));
    }
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace pnpr
