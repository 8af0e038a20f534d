// Copyright (C) 2026 The lagm Authors
// SPDX-License-Identifier: Apache-2.0

#include "lagm/checkpoint.hpp"

#include "lagm/error.hpp"

#include <zlib.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

namespace lagm {

namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

constexpr std::uint8_t kDtypeF64 = 0;

template <typename T>
void put(std::string& out, T value) {
    char buf[sizeof(T)];
    std::memcpy(buf, &value, sizeof(T));
    out.append(buf, sizeof(T));
}

void put_string(std::string& out, std::string_view s) {
    put<std::uint64_t>(out, s.size());
    out.append(s);
}

class Reader {
public:
    explicit Reader(std::string_view bytes) : bytes_(bytes) {}

    template <typename T>
    T get() {
        need(sizeof(T));
        T value;
        std::memcpy(&value, bytes_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return value;
    }

    std::string_view take(std::size_t n) {
        need(n);
        auto s = bytes_.substr(pos_, n);
        pos_ += n;
        return s;
    }

    std::string get_string() { return std::string(take(get<std::uint64_t>())); }
    std::size_t position() const { return pos_; }

private:
    void need(std::size_t n) const {
        if (n > bytes_.size() - pos_) throw ParseError("truncated checkpoint", bytes_.size());
    }

    std::string_view bytes_;
    std::size_t pos_ = 0;
};

std::uint32_t crc_of(std::string_view bytes) {
    uLong crc = crc32(0L, Z_NULL, 0);
    crc = crc32(crc, reinterpret_cast<const Bytef*>(bytes.data()), static_cast<uInt>(bytes.size()));
    return static_cast<std::uint32_t>(crc);
}

}  // namespace

const Matrix& Checkpoint::tensor(std::string_view name) const {
    for (const auto& [n, m] : tensors)
        if (n == name) return m;
    throw InvalidArgument("checkpoint has no tensor " + std::string(name));
}

bool Checkpoint::has(std::string_view name) const {
    for (const auto& t : tensors)
        if (t.first == name) return true;
    return false;
}

void Checkpoint::add_parameters(const ParameterSet& params, const std::string& prefix) {
    for (std::size_t i = 0; i < params.size(); ++i) {
        const auto id = static_cast<ParamId>(i);
        add(prefix + params.name(id), params.value(id));
    }
}

void Checkpoint::load_parameters(ParameterSet& params, const std::string& prefix) const {
    for (std::size_t i = 0; i < params.size(); ++i) {
        const auto id = static_cast<ParamId>(i);
        const Matrix& src = tensor(prefix + params.name(id));
        Matrix& dst = params.value(id);
        LAGM_CHECK(src.rows() == dst.rows() && src.cols() == dst.cols(),
                   "checkpoint tensor " + prefix + params.name(id) + " has an unexpected shape");
        dst = src;
    }
}

std::string serialize_checkpoint(const Checkpoint& ckpt) {
    std::string out(kCheckpointMagic);
    put<std::uint32_t>(out, kCheckpointVersion);
    put_string(out, ckpt.kind);
    put_string(out, ckpt.config.dump());
    put<std::uint64_t>(out, ckpt.tensors.size());
    for (const auto& [name, m] : ckpt.tensors) {
        put_string(out, name);
        put<std::uint8_t>(out, kDtypeF64);
        put<std::uint64_t>(out, static_cast<std::uint64_t>(m.rows()));
        put<std::uint64_t>(out, static_cast<std::uint64_t>(m.cols()));
        out.append(reinterpret_cast<const char*>(m.data()), static_cast<std::size_t>(m.size()) * sizeof(double));
    }
    put<std::uint32_t>(out, crc_of(out));
    return out;
}

Checkpoint deserialize_checkpoint(std::string_view bytes) {
    if (bytes.size() < kCheckpointMagic.size() + 8) throw ParseError("truncated checkpoint", bytes.size());
    if (bytes.substr(0, kCheckpointMagic.size()) != kCheckpointMagic) throw ParseError("not a checkpoint file", 0);
    const std::string_view body = bytes.substr(0, bytes.size() - 4);
    std::uint32_t stored;
    std::memcpy(&stored, bytes.data() + body.size(), 4);

    Reader r(body);
    r.take(kCheckpointMagic.size());
    const auto version = r.get<std::uint32_t>();
    if (version != kCheckpointVersion)
        throw VersionError("checkpoint version " + std::to_string(version) + " is not supported");
    if (crc_of(body) != stored) throw ParseError("checkpoint checksum mismatch", body.size());

    Checkpoint ckpt;
    ckpt.kind = r.get_string();
    const auto config_offset = r.position();
    try {
        ckpt.config = nlohmann::json::parse(r.get_string());
    } catch (const nlohmann::json::parse_error&) {
        throw ParseError("malformed checkpoint config", config_offset);
    }
    const auto count = r.get<std::uint64_t>();
    for (std::uint64_t i = 0; i < count; ++i) {
        std::string name = r.get_string();
        const auto offset = r.position();
        if (r.get<std::uint8_t>() != kDtypeF64) throw ParseError("unsupported tensor element type", offset);
        const auto rows = r.get<std::uint64_t>();
        const auto cols = r.get<std::uint64_t>();
        const auto payload = r.take(rows * cols * sizeof(double));
        Matrix m(static_cast<Index>(rows), static_cast<Index>(cols));
        std::memcpy(m.data(), payload.data(), payload.size());
        ckpt.tensors.emplace_back(std::move(name), std::move(m));
    }
    if (r.position() != body.size()) throw ParseError("trailing bytes in checkpoint", r.position());
    return ckpt;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
    const std::string bytes = serialize_checkpoint(ckpt);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("io_error", "cannot open " + path.string() + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error("io_error", "failed writing " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("io_error", "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return deserialize_checkpoint(ss.str());
}

}  // namespace lagm
