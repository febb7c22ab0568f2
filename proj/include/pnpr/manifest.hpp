#pragma once

// Sidecar manifest written next to degraded images: a flat key-value file
// that records exactly how the observation was produced so a later restore
// run can reproduce the degradation spec field-for-field.

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "pnpr/degrade.hpp"
#include "pnpr/errors.hpp"
#include "pnpr/kernel.hpp"

namespace pnpr {

struct DegradeManifest {
    Task task = Task::Denoise;
    int scale = 1;
    double sigma = 0.0;
    uint64_t seed = 0;
    std::string kernel_path;  // empty when the task has no kernel
    std::string kernel_hash;
    std::string source_path;
    int orig_height = 0, orig_width = 0;  // size before any pre-padding
    int pad_bottom = 0, pad_right = 0;    // reflect padding applied before degradation
};

namespace detail {

inline std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

}  // namespace detail

inline void save_manifest(const DegradeManifest& m, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw DataError("save_manifest: cannot open '" + path + "'");
    f << "task = " << task_name(m.task) << "\n";
    f << "scale = " << m.scale << "\n";
    f << "sigma = " << detail::fmt_double(m.sigma) << "\n";
    f << "seed = " << m.seed << "\n";
    if (!m.kernel_path.empty()) {
        f << "kernel = " << m.kernel_path << "\n";
        f << "kernel_hash = " << m.kernel_hash << "\n";
    }
    if (!m.source_path.empty()) f << "source = " << m.source_path << "\n";
    f << "orig_height = " << m.orig_height << "\n";
    f << "orig_width = " << m.orig_width << "\n";
    if (m.pad_bottom != 0 || m.pad_right != 0) {
        f << "pad_bottom = " << m.pad_bottom << "\n";
        f << "pad_right = " << m.pad_right << "\n";
    }
    if (!f) throw DataError("save_manifest: write failed for '" + path + "'");
}

inline DegradeManifest load_manifest(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw DataError("load_manifest: cannot open '" + path + "'");
    DegradeManifest m;
    std::string line;
    int lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        const std::string t = detail::trim(line);
        if (t.empty() || t[0] == '#') continue;
        const size_t eq = t.find('=');
        if (eq == std::string::npos)
            throw DataError("load_manifest: '" + path + "' line " + std::to_string(lineno) +
                            ": expected 'key = value'");
        const std::string key = detail::trim(t.substr(0, eq));
        const std::string val = detail::trim(t.substr(eq + 1));
        try {
            if (key == "task")
                m.task = parse_task(val);
            else if (key == "scale")
                m.scale = std::stoi(val);
            else if (key == "sigma")
                m.sigma = std::stod(val);
            else if (key == "seed")
                m.seed = std::stoull(val);
            else if (key == "kernel")
                m.kernel_path = val;
            else if (key == "kernel_hash")
                m.kernel_hash = val;
            else if (key == "source")
                m.source_path = val;
            else if (key == "orig_height")
                m.orig_height = std::stoi(val);
            else if (key == "orig_width")
                m.orig_width = std::stoi(val);
            else if (key == "pad_bottom")
                m.pad_bottom = std::stoi(val);
            else if (key == "pad_right")
                m.pad_right = std::stoi(val);
            else
                throw DataError("load_manifest: unknown key '" + key + "'");
        } catch (const std::invalid_argument&) {
            throw DataError("load_manifest: bad value for '" + key + "' at line " +
                            std::to_string(lineno));
        } catch (const std::out_of_range&) {
            throw DataError("load_manifest: value out of range for '" + key + "'");
        }
    }
    return m;
}

// Builds the degradation spec recorded by a manifest, loading and verifying
// the kernel.
inline DegradationSpec manifest_to_spec(const DegradeManifest& m) {
    DegradationSpec spec;
    spec.task = m.task;
    spec.scale = m.scale;
    spec.sigma_s = m.sigma;
    spec.seed = m.seed;
    if (!m.kernel_path.empty()) {
        spec.kernel = load_kernel(m.kernel_path);
        spec.has_kernel = true;
        const std::string h = kernel_hash(spec.kernel);
        if (!m.kernel_hash.empty() && h != m.kernel_hash)
            throw DataError("manifest kernel '" + m.kernel_path + "' hash " + h +
                            " does not match recorded " + m.kernel_hash);
    }
    spec.validate();
    return spec;
}

}  // namespace pnpr
