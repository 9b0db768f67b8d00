// Copyright 2026 The fcdgan Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Checkpoints: one archive per network, as a raw parameter blob (<stem>.bin)
// plus a JSON sidecar (<stem>.json) carrying the architecture string and its
// hash, band count, training regime, seed and epoch. Loaders recompute the
// architecture hash and refuse blobs built for a different architecture.
//
// Blob layout (little-endian):
//   "FCDG" | u32 version | u8 scalar_size | u32 tensor_count
//   per tensor: u32 name_len | name | u32 rank | u32 dims[rank] | data

#if __has_include(<nlohmann/json.hpp>)
#include <nlohmann/json.hpp>
#else
#include <json.hpp>  // vendored single header
#endif

#include <cstring>
#include <fstream>
#include <string>

#include "fcdgan/nn.hpp"
#include "fcdgan/rng.hpp"

namespace fcdgan::ckpt {

class CheckpointError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

struct CheckpointInfo {
    std::string regime = "none";
    int bands = 0;
    std::uint64_t seed = 0;
    int epoch = 0;
};

inline std::string arch_hash_hex(const std::string& arch_string) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(arch_string)));
    return buf;
}

template <typename T>
void save_checkpoint(const std::string& stem, const nn::ParamList<T>& params, const std::string& arch_string,
                     const CheckpointInfo& info) {
    // blob
    std::ofstream bin(stem + ".bin", std::ios::binary | std::ios::trunc);
    if (!bin) throw CheckpointError("cannot write " + stem + ".bin");
    auto w32 = [&](std::uint32_t v) { bin.write(reinterpret_cast<const char*>(&v), 4); };
    bin.write("FCDG", 4);
    w32(1);
    const std::uint8_t ssize = sizeof(T);
    bin.write(reinterpret_cast<const char*>(&ssize), 1);
    w32(static_cast<std::uint32_t>(params.items.size()));
    for (const auto& p : params.items) {
        w32(static_cast<std::uint32_t>(p->name.size()));
        bin.write(p->name.data(), static_cast<std::streamsize>(p->name.size()));
        w32(static_cast<std::uint32_t>(p->value.rank()));
        for (int d = 0; d < p->value.rank(); ++d) w32(static_cast<std::uint32_t>(p->value.dim(d)));
        bin.write(reinterpret_cast<const char*>(p->value.ptr()),
                  static_cast<std::streamsize>(sizeof(T) * p->value.numel()));
    }
    if (!bin) throw CheckpointError("write failed: " + stem + ".bin");
    bin.close();

    // sidecar
    nlohmann::json j;
    j["format_version"] = 1;
    j["arch"] = arch_string;
    j["arch_hash"] = arch_hash_hex(arch_string);
    j["scalar_bytes"] = sizeof(T);
    j["bands"] = info.bands;
    j["regime"] = info.regime;
    j["seed"] = info.seed;
    j["epoch"] = info.epoch;
    std::ofstream meta(stem + ".json", std::ios::trunc);
    if (!meta) throw CheckpointError("cannot write " + stem + ".json");
    meta << j.dump(2) << "\n";
}

inline nlohmann::json read_sidecar(const std::string& stem) {
    std::ifstream meta(stem + ".json");
    if (!meta) throw CheckpointError("cannot open " + stem + ".json");
    nlohmann::json j;
    meta >> j;
    return j;
}

/// Loads parameters into an already-built network. The sidecar's architecture
/// hash must match the expected architecture exactly.
template <typename T>
CheckpointInfo load_checkpoint(const std::string& stem, nn::ParamList<T>& params,
                               const std::string& expected_arch) {
    const auto j = read_sidecar(stem);
    const std::string file_arch = j.value("arch", "");
    const std::string file_hash = j.value("arch_hash", "");
    if (file_hash != arch_hash_hex(file_arch))
        throw CheckpointError(stem + ": sidecar arch hash does not match its arch string");
    if (file_hash != arch_hash_hex(expected_arch))
        throw CheckpointError(stem + ": architecture mismatch (checkpoint '" + file_arch + "', expected '" +
                              expected_arch + "')");
    if (j.value("scalar_bytes", 0) != static_cast<int>(sizeof(T)))
        throw CheckpointError(stem + ": scalar width mismatch");

    std::ifstream bin(stem + ".bin", std::ios::binary);
    if (!bin) throw CheckpointError("cannot open " + stem + ".bin");
    char magic[4];
    bin.read(magic, 4);
    if (std::memcmp(magic, "FCDG", 4) != 0) throw CheckpointError(stem + ".bin: bad magic");
    auto r32 = [&]() {
        std::uint32_t v = 0;
        bin.read(reinterpret_cast<char*>(&v), 4);
        return v;
    };
    if (r32() != 1) throw CheckpointError(stem + ".bin: unsupported version");
    std::uint8_t ssize = 0;
    bin.read(reinterpret_cast<char*>(&ssize), 1);
    if (ssize != sizeof(T)) throw CheckpointError(stem + ".bin: scalar width mismatch");
    const std::uint32_t count = r32();
    if (count != params.items.size()) throw CheckpointError(stem + ".bin: tensor count mismatch");
    for (auto& p : params.items) {
        const std::uint32_t name_len = r32();
        std::string name(name_len, '\0');
        bin.read(name.data(), name_len);
        if (name != p->name) throw CheckpointError(stem + ".bin: tensor order mismatch at '" + name + "'");
        const std::uint32_t rank = r32();
        std::vector<int> dims(rank);
        for (auto& d : dims) d = static_cast<int>(r32());
        if (dims != p->value.shape) throw CheckpointError(stem + ".bin: shape mismatch at '" + name + "'");
        bin.read(reinterpret_cast<char*>(p->value.ptr()),
                 static_cast<std::streamsize>(sizeof(T) * p->value.numel()));
    }
    if (!bin) throw CheckpointError(stem + ".bin: truncated blob");

    CheckpointInfo info;
    info.regime = j.value("regime", "none");
    info.bands = j.value("bands", 0);
    info.seed = j.value("seed", std::uint64_t{0});
    info.epoch = j.value("epoch", 0);
    return info;
}

}  // namespace fcdgan::ckpt
