#include "warm/io.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace warm {

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open for reading: " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot open for writing: " + path.string());
    }
    out << content;
    if (!out) {
        throw std::runtime_error("write failed: " + path.string());
    }
}

std::string CsvTable::to_string() const {
    std::ostringstream ss;
    for (std::size_t i = 0; i < header.size(); ++i) {
        ss << (i ? "," : "") << header[i];
    }
    ss << '\n';
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            ss << (i ? "," : "") << row[i];
        }
        ss << '\n';
    }
    return ss.str();
}

void CsvTable::write(const std::filesystem::path& path) const {
    write_text_file(path, to_string());
}

}  // namespace warm
