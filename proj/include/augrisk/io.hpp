// Copyright (c) 2026 augrisk contributors
// Licensed under the Apache License, Version 2.0.

#pragma once

#include <bit>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "augrisk/core.hpp"

namespace augrisk {

// Explicit-endianness scalar IO. IDX headers are big-endian; checkpoints are
// little-endian with a fixed magic/version prefix.

inline void write_u32_be(std::ostream& os, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v >> 24), static_cast<unsigned char>(v >> 16),
                          static_cast<unsigned char>(v >> 8), static_cast<unsigned char>(v)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

inline std::uint32_t read_u32_be(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    if (!is) throw TruncatedFile("unexpected end of file while reading a 32-bit header field");
    return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) | (std::uint32_t(b[2]) << 8) |
           std::uint32_t(b[3]);
}

inline void write_u32_le(std::ostream& os, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

inline std::uint32_t read_u32_le(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    if (!is) throw TruncatedFile("unexpected end of file while reading a 32-bit header field");
    return std::uint32_t(b[0]) | (std::uint32_t(b[1]) << 8) | (std::uint32_t(b[2]) << 16) |
           (std::uint32_t(b[3]) << 24);
}

inline void write_u64_le(std::ostream& os, std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    os.write(reinterpret_cast<const char*>(b), 8);
}

inline std::uint64_t read_u64_le(std::istream& is) {
    unsigned char b[8];
    is.read(reinterpret_cast<char*>(b), 8);
    if (!is) throw TruncatedFile("unexpected end of file while reading a 64-bit header field");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t(b[i]) << (8 * i);
    return v;
}

inline void write_f64_le(std::ostream& os, double d) {
    write_u64_le(os, std::bit_cast<std::uint64_t>(d));
}

inline double read_f64_le(std::istream& is) {
    return std::bit_cast<double>(read_u64_le(is));
}

/// Full-precision decimal rendering; round-trips float64 exactly and is
/// byte-stable across runs.
inline std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline void write_text_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error("cannot open " + path.string() + " for writing");
    os << content;
}

inline std::string read_file_bytes(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw Error("cannot open " + path.string());
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

/// Minimal CSV writer: quoteless numeric tables with a header row.
class CsvWriter {
public:
    explicit CsvWriter(std::vector<std::string> header) : header_(std::move(header)) {}

    void add_row(const std::vector<std::string>& cells) {
        if (cells.size() != header_.size())
            throw Error("csv row width " + std::to_string(cells.size()) + " != header width " +
                        std::to_string(header_.size()));
        rows_.push_back(cells);
    }

    std::string str() const {
        std::string out = join(header_);
        for (const auto& r : rows_) out += join(r);
        return out;
    }

    void save(const std::filesystem::path& path) const { write_text_file(path, str()); }

private:
    static std::string join(const std::vector<std::string>& cells) {
        std::string line;
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) line += ",";
            line += cells[i];
        }
        line += "\n";
        return line;
    }

    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> rows_;
};

/// key = value summary files, one entry per line, insertion-ordered.
class KvSummary {
public:
    void set(const std::string& key, const std::string& value) { entries_.emplace_back(key, value); }
    void set(const std::string& key, double value) { set(key, fmt_double(value)); }
    void set(const std::string& key, std::size_t value) { set(key, std::to_string(value)); }

    std::string str() const {
        std::string out;
        for (const auto& [k, v] : entries_) out += k + " = " + v + "\n";
        return out;
    }

    void save(const std::filesystem::path& path) const { write_text_file(path, str()); }

private:
    std::vector<std::pair<std::string, std::string>> entries_;
};

}  // namespace augrisk
