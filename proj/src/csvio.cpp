#include "rdmft/csvio.hpp"

#include <cstdio>

#include "rdmft/errors.hpp"

namespace rdmft::csvio {

std::string format_double(double value) {
    char buffer[40];
    std::snprintf(buffer, sizeof(buffer), "%.12g", value);
    return buffer;
}

Writer::Writer(const std::string& path) : out_(path) {
    if (!out_) throw config_error("cannot open output file " + path);
}

void Writer::metadata(const std::string& key, const std::string& value) {
    if (header_written_) throw config_error("metadata must precede the CSV header");
    out_ << "# " << key << " = " << value << "\n";
}

void Writer::header(const std::vector<std::string>& columns) {
    for (std::size_t k = 0; k < columns.size(); ++k)
        out_ << columns[k] << (k + 1 < columns.size() ? "," : "\n");
    header_written_ = true;
}

void Writer::row(const std::vector<std::string>& fields) {
    for (std::size_t k = 0; k < fields.size(); ++k)
        out_ << fields[k] << (k + 1 < fields.size() ? "," : "\n");
}

void Writer::close() {
    out_.close();
}

}  // namespace rdmft::csvio
