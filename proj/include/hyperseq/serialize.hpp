#pragma once

// Flat binary container of named double tensors with a JSON header.
// Layout: "HSQT" | u32 version | u64 header_len | header JSON | raw payload.
// Payload is the tensors' doubles in header order, little-endian, so round
// trips are bit-exact.

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "hyperseq/common.hpp"
#include "hyperseq/optim.hpp"
#include "hyperseq/tensor.hpp"

namespace hyperseq::io {

struct TensorEntry {
    std::string name;
    opt::Space space = opt::Space::euclidean;
    ad::Tensor tensor;
};

struct Container {
    std::vector<TensorEntry> entries;
    nlohmann::json meta;

    const TensorEntry* find(const std::string& name) const {
        for (const auto& e : entries)
            if (e.name == name) return &e;
        return nullptr;
    }
};

inline void save_container(const std::string& path, const Container& c) {
    nlohmann::json header;
    header["version"] = 1;
    header["meta"] = c.meta.is_null() ? nlohmann::json::object() : c.meta;
    nlohmann::json tensors = nlohmann::json::array();
    for (const auto& e : c.entries) {
        tensors.push_back({{"name", e.name},
                           {"shape", e.tensor.shape()},
                           {"space", e.space == opt::Space::manifold ? "manifold" : "euclidean"}});
    }
    header["tensors"] = tensors;
    const std::string hs = header.dump();

    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("save_container: cannot open " + path);
    out.write("HSQT", 4);
    const std::uint32_t version = 1;
    out.write(reinterpret_cast<const char*>(&version), sizeof(version));
    const std::uint64_t hlen = hs.size();
    out.write(reinterpret_cast<const char*>(&hlen), sizeof(hlen));
    out.write(hs.data(), static_cast<std::streamsize>(hs.size()));
    for (const auto& e : c.entries) {
        const auto& d = e.tensor.data();
        out.write(reinterpret_cast<const char*>(d.data()),
                  static_cast<std::streamsize>(d.size() * sizeof(double)));
    }
    if (!out) throw io_error("save_container: write failed for " + path);
}

inline Container load_container(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("load_container: cannot open " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, "HSQT", 4) != 0)
        throw io_error("load_container: bad magic in " + path);
    std::uint32_t version = 0;
    in.read(reinterpret_cast<char*>(&version), sizeof(version));
    if (!in || version != 1) throw io_error("load_container: unsupported version");
    std::uint64_t hlen = 0;
    in.read(reinterpret_cast<char*>(&hlen), sizeof(hlen));
    std::string hs(hlen, '\0');
    in.read(hs.data(), static_cast<std::streamsize>(hlen));
    if (!in) throw io_error("load_container: truncated header");
    nlohmann::json header = nlohmann::json::parse(hs, nullptr, false);
    if (header.is_discarded()) throw io_error("load_container: corrupt header JSON");

    Container c;
    c.meta = header.value("meta", nlohmann::json::object());
    for (const auto& tj : header.at("tensors")) {
        TensorEntry e;
        e.name = tj.at("name").get<std::string>();
        e.space = tj.at("space").get<std::string>() == "manifold" ? opt::Space::manifold
                                                                  : opt::Space::euclidean;
        const auto shape = tj.at("shape").get<std::vector<std::size_t>>();
        e.tensor = shape.empty() ? ad::Tensor::scalar(0.0) : ad::Tensor::zeros(shape);
        in.read(reinterpret_cast<char*>(e.tensor.data().data()),
                static_cast<std::streamsize>(e.tensor.size() * sizeof(double)));
        if (!in) throw io_error("load_container: truncated payload");
        c.entries.push_back(std::move(e));
    }
    return c;
}

}  // namespace hyperseq::io
