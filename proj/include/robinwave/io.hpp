#pragma once

#include <charconv>
#include <fstream>
#include <initializer_list>
#include <span>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "robinwave/error.hpp"

namespace robinwave::io {

/// Locale-independent rendering with 17 significant digits.
inline std::string format_double(double value) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), value, std::chars_format::general, 17);
    if (res.ec != std::errc{}) throw IoError("format_double: conversion failed");
    return std::string(buf, res.ptr);
}

/// Column-oriented CSV writer. Every row must match the header width.
class CsvWriter {
public:
    CsvWriter(const std::string& path, std::initializer_list<std::string_view> header)
        : CsvWriter(path, std::vector<std::string>(header.begin(), header.end())) {}

    CsvWriter(const std::string& path, const std::vector<std::string>& header)
        : path_(path), out_(path, std::ios::binary | std::ios::trunc), width_(header.size()) {
        if (!out_) throw IoError("cannot open " + path + " for writing");
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (i) out_ << ',';
            out_ << header[i];
        }
        out_ << '\n';
    }

    void row(std::span<const double> values) {
        if (values.size() != width_) throw IoError("CSV row width mismatch in " + path_);
        for (std::size_t i = 0; i < values.size(); ++i) {
            if (i) out_ << ',';
            out_ << format_double(values[i]);
        }
        out_ << '\n';
        if (!out_) throw IoError("write failed for " + path_);
    }

    void row(std::initializer_list<double> values) {
        row(std::span<const double>(values.begin(), values.size()));
    }

    void close() {
        out_.close();
        if (out_.fail()) throw IoError("close failed for " + path_);
    }

private:
    std::string path_;
    std::ofstream out_;
    std::size_t width_;
};

inline void write_text(const std::string& path, std::string_view text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out << text;
    if (!out) throw IoError("write failed for " + path);
}

}  // namespace robinwave::io
