#pragma once

#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>

namespace ktsim {

/// Minimal deterministic CSV writer: UTF-8, comma separators, '.' decimal
/// point, fixed six decimals for reals, integer nanoseconds for times.
class CsvWriter {
public:
    explicit CsvWriter(const std::string& path) : out_(path, std::ios::binary) {
        if (!out_) throw std::runtime_error("cannot open output file: " + path);
    }

    void header(const std::string& line) { out_ << line << '\n'; }

    CsvWriter& field(const std::string& s) {
        sep();
        out_ << s;
        return *this;
    }
    CsvWriter& field(int64_t v) {
        sep();
        out_ << v;
        return *this;
    }
    CsvWriter& field(uint64_t v) {
        sep();
        out_ << v;
        return *this;
    }
    CsvWriter& field(double v) {
        sep();
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.6f", v);
        out_ << buf;
        return *this;
    }
    CsvWriter& field(bool v) {
        sep();
        out_ << (v ? "true" : "false");
        return *this;
    }

    void end_row() {
        out_ << '\n';
        first_ = true;
    }

private:
    void sep() {
        if (!first_) out_ << ',';
        first_ = false;
    }

    std::ofstream out_;
    bool first_ = true;
};

} // namespace ktsim
