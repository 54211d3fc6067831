#pragma once

#include <filesystem>
#include <fstream>
#include <functional>
#include <istream>
#include <stdexcept>
#include <string>

#include <json.hpp>

namespace aspecteval::jsonl {

struct ParseError : std::runtime_error {
    ParseError(const std::string& what, std::size_t line)
        : std::runtime_error(what + " (line " + std::to_string(line) + ")"), line(line) {}
    std::size_t line;
};

/// Calls `fn(record, line_number)` for every non-blank line of a JSON Lines stream.
inline void for_each_record(std::istream& in,
                            const std::function<void(const nlohmann::json&, std::size_t)>& fn) {
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        nlohmann::json record;
        try {
            record = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw ParseError(std::string("malformed JSON: ") + e.what(), lineno);
        }
        fn(record, lineno);
    }
}

inline void for_each_record(const std::filesystem::path& path,
                            const std::function<void(const nlohmann::json&, std::size_t)>& fn) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    for_each_record(in, fn);
}

}  // namespace aspecteval::jsonl
