// csv.hpp — deterministic text output: shortest round-trip doubles, atomic writes
#pragma once

#include <charconv>
#include <complex>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace qtb {

// Shortest decimal form that parses back to the same double. Keeps CSV files
// byte-stable across runs and platforms using the same libstdc++.
inline std::string format_double(double v) {
    char buf[40];
    const std::to_chars_result r = std::to_chars(buf, buf + sizeof(buf), v);
    if (r.ec != std::errc())
        throw std::runtime_error("format_double: conversion failed");
    return std::string(buf, r.ptr);
}

inline std::string format_complex(std::complex<double> v) {
    std::string s = format_double(v.real());
    s += v.imag() < 0.0 || (v.imag() == 0.0 && std::signbit(v.imag())) ? "-" : "+";
    s += format_double(std::abs(v.imag()));
    s += "i";
    return s;
}

// Write-then-rename so a crashed run never leaves a truncated file behind.
inline void write_file_atomic(const std::filesystem::path& target, const std::string& content) {
    const std::filesystem::path tmp = target.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
        out.write(content.data(), std::streamsize(content.size()));
        if (!out) throw std::runtime_error("short write to " + tmp.string());
    }
    std::filesystem::rename(tmp, target);
}

// Rows of shortest-form doubles under '#' comment headers and one column line.
struct CsvTable {
    std::vector<std::string> comments;  // emitted as "# ..." lines
    std::string header;                 // comma-separated column names
    std::vector<std::vector<std::string>> rows;

    void add_row(std::initializer_list<double> vals) {
        std::vector<std::string> row;
        row.reserve(vals.size());
        for (double v : vals) row.push_back(format_double(v));
        rows.push_back(std::move(row));
    }

    void add_row_raw(std::vector<std::string> row) { rows.push_back(std::move(row)); }

    std::string render() const {
        std::string out;
        for (const std::string& c : comments) {
            out += "# ";
            out += c;
            out += '\n';
        }
        out += header;
        out += '\n';
        for (const std::vector<std::string>& row : rows) {
            for (std::size_t i = 0; i < row.size(); ++i) {
                if (i) out += ',';
                out += row[i];
            }
            out += '\n';
        }
        return out;
    }

    void write(const std::filesystem::path& target) const { write_file_atomic(target, render()); }
};

}  // namespace qtb
