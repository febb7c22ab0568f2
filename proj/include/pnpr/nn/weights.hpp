#pragma once

// Single-file weight container: an 8-byte magic, a length-prefixed JSON
// manifest, then tightly packed little-endian float32 blobs. The manifest
// lists every tensor's name, shape and payload offset plus a small meta
// section; see docs/weights.md for the exact layout.

#include <nlohmann/json.hpp>

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "pnpr/errors.hpp"
#include "pnpr/nn/graph.hpp"

namespace pnpr {

inline constexpr char kWeightMagic[8] = {'P', 'N', 'P', 'R', 'W', 'T', '0', '1'};

namespace detail {

// Reads and validates the header; returns the manifest and leaves the stream
// positioned at the payload start.
inline nlohmann::json read_weight_manifest(std::ifstream& f, const std::string& path) {
    char magic[8];
    f.read(magic, 8);
    if (!f || std::memcmp(magic, kWeightMagic, 8) != 0)
        throw DataError("weights: '" + path + "' is not a weight file");
    uint64_t mlen = 0;
    f.read(reinterpret_cast<char*>(&mlen), 8);
    if (!f || mlen == 0 || mlen > (1u << 26))
        throw DataError("weights: corrupt manifest length in '" + path + "'");
    std::string mtext(mlen, '\0');
    f.read(mtext.data(), static_cast<std::streamsize>(mlen));
    if (!f) throw DataError("weights: truncated manifest in '" + path + "'");
    try {
        return nlohmann::json::parse(mtext);
    } catch (const nlohmann::json::exception& e) {
        throw DataError("weights: bad manifest in '" + path + "': " + e.what());
    }
}

}  // namespace detail

inline void save_weights(const NetGraph& graph, const std::string& path) {
    if (!graph.has_weights()) throw DataError("save_weights: graph has unbound parameters");
    nlohmann::ordered_json manifest;
    manifest["meta"]["predicts_residual"] = graph.predicts_residual;
    manifest["tensors"] = nlohmann::ordered_json::array();
    uint64_t offset = 0;
    for (const auto& p : graph.params()) {
        nlohmann::ordered_json t;
        t["name"] = p.name;
        t["shape"] = p.shape;
        t["dtype"] = "f32";
        t["offset"] = offset;
        manifest["tensors"].push_back(std::move(t));
        offset += p.elems() * 4;
    }
    const std::string mtext = manifest.dump();

    std::ofstream f(path, std::ios::binary);
    if (!f) throw DataError("save_weights: cannot open '" + path + "'");
    f.write(kWeightMagic, 8);
    const uint64_t mlen = mtext.size();
    f.write(reinterpret_cast<const char*>(&mlen), 8);
    f.write(mtext.data(), static_cast<std::streamsize>(mtext.size()));
    std::vector<float> buf;
    for (const auto& p : graph.params()) {
        const auto& v = graph.weight(p.name);
        buf.assign(v.begin(), v.end());
        f.write(reinterpret_cast<const char*>(buf.data()),
                static_cast<std::streamsize>(buf.size() * 4));
    }
    if (!f) throw DataError("save_weights: write failed for '" + path + "'");
}

// Binds every parameter of the graph from the file; the error for a manifest
// mismatch lists all missing and extra tensor names at once.
inline void load_weights(NetGraph& graph, const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DataError("load_weights: cannot open '" + path + "'");
    const nlohmann::json manifest = detail::read_weight_manifest(f, path);

    struct Entry {
        std::vector<int> shape;
        uint64_t offset;
    };
    std::map<std::string, Entry> entries;
    for (const auto& t : manifest.at("tensors")) {
        const std::string name = t.at("name").get<std::string>();
        const std::string dtype = t.at("dtype").get<std::string>();
        if (dtype != "f32")
            throw DataError("load_weights: tensor '" + name + "' has unsupported dtype '" +
                            dtype + "'");
        entries[name] = Entry{t.at("shape").get<std::vector<int>>(),
                              t.at("offset").get<uint64_t>()};
    }

    std::string missing, extra;
    for (const auto& p : graph.params())
        if (!entries.count(p.name)) missing += (missing.empty() ? "" : ", ") + p.name;
    {
        std::map<std::string, bool> known;
        for (const auto& p : graph.params()) known[p.name] = true;
        for (const auto& [name, e] : entries)
            if (!known.count(name)) extra += (extra.empty() ? "" : ", ") + name;
    }
    if (!missing.empty() || !extra.empty())
        throw DataError("load_weights: manifest mismatch; missing [" + missing + "], extra [" +
                        extra + "]");

    const std::streampos payload_start = f.tellg();
    std::vector<float> buf;
    for (const auto& p : graph.params()) {
        const Entry& e = entries.at(p.name);
        if (e.shape != p.shape)
            throw DataError("load_weights: tensor '" + p.name + "' shape mismatch");
        buf.resize(p.elems());
        f.seekg(payload_start + static_cast<std::streamoff>(e.offset));
        f.read(reinterpret_cast<char*>(buf.data()),
               static_cast<std::streamsize>(buf.size() * 4));
        if (!f) throw DataError("load_weights: truncated payload at '" + p.name + "'");
        graph.bind(p.name, std::vector<double>(buf.begin(), buf.end()));
    }
    if (manifest.contains("meta") && manifest["meta"].contains("predicts_residual"))
        graph.predicts_residual = manifest["meta"]["predicts_residual"].get<bool>();
}

// Recovers the construction parameters of a stored encoder-decoder network
// from tensor shapes alone, so a graph can be rebuilt to match the file.
struct StoredCunetShape {
    std::vector<int> widths;  // 4 per-scale channel counts
    int in_channels = 0;
    int blocks_per_scale = 0;
};

inline StoredCunetShape infer_cunet_shape(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DataError("infer_cunet_shape: cannot open '" + path + "'");
    const nlohmann::json manifest = detail::read_weight_manifest(f, path);

    std::map<std::string, std::vector<int>> shapes;
    for (const auto& t : manifest.at("tensors"))
        shapes[t.at("name").get<std::string>()] = t.at("shape").get<std::vector<int>>();

    auto shape_of = [&](const std::string& name) -> const std::vector<int>& {
        auto it = shapes.find(name);
        if (it == shapes.end())
            throw DataError("infer_cunet_shape: '" + path + "' lacks tensor '" + name + "'");
        return it->second;
    };

    StoredCunetShape s;
    const auto& head = shape_of("head.w");
    if (head.size() != 4) throw DataError("infer_cunet_shape: malformed head tensor");
    s.in_channels = head[1];
    s.widths = {head[0], shape_of("down0.w")[0], shape_of("down1.w")[0], shape_of("down2.w")[0]};
    while (shapes.count("enc0.b" + std::to_string(s.blocks_per_scale) + ".dw.w"))
        ++s.blocks_per_scale;
    if (s.blocks_per_scale == 0) throw DataError("infer_cunet_shape: no residual blocks found");
    return s;
}

}  // namespace pnpr
