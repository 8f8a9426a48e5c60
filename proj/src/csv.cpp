#include "exbound/csv.hpp"

#include <cstdio>
#include <stdexcept>

namespace exbound {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

CsvWriter::CsvWriter(const std::string& path,
                     const std::vector<std::string>& header)
    : path_(path), out_(path, std::ios::binary | std::ios::trunc) {
    if (!out_) {
        throw std::runtime_error("csv: cannot create '" + path + "'");
    }
    row(header);
}

CsvWriter& CsvWriter::field(const std::string& text) {
    if (row_open_) raw(",");
    raw(text);
    row_open_ = true;
    return *this;
}

CsvWriter& CsvWriter::field(double v) { return field(format_double(v)); }

CsvWriter& CsvWriter::field(int v) { return field(std::to_string(v)); }

void CsvWriter::end_row() {
    raw("\n");
    row_open_ = false;
}

void CsvWriter::row(const std::vector<std::string>& cells) {
    for (const auto& c : cells) field(c);
    end_row();
}

void CsvWriter::comment_row(const std::vector<std::string>& cells) {
    raw("# ");
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) raw(",");
        raw(cells[i]);
    }
    raw("\n");
}

void CsvWriter::close() {
    if (closed_) return;
    out_.flush();
    if (!out_) {
        throw std::runtime_error("csv: write failure on '" + path_ + "'");
    }
    out_.close();
    closed_ = true;
}

CsvWriter::~CsvWriter() {
    try {
        close();
    } catch (...) {
        // Destructors must not throw; close() explicitly to observe errors.
    }
}

void CsvWriter::raw(const std::string& text) { out_ << text; }

}  // namespace exbound
