#pragma once

#include <fstream>
#include <string>
#include <vector>

namespace rdmft::csvio {

// Deterministic shortest-ish formatting used for every numeric CSV field.
std::string format_double(double value);

// CSV file with '#'-prefixed metadata lines before the header row.
class Writer {
public:
    explicit Writer(const std::string& path);

    void metadata(const std::string& key, const std::string& value);
    void header(const std::vector<std::string>& columns);
    void row(const std::vector<std::string>& fields);
    void close();

private:
    std::ofstream out_;
    bool header_written_ = false;
};

}  // namespace rdmft::csvio
