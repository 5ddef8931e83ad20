#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "carroll/core.hpp"

namespace carroll::ini {

// Minimal sectioned key/value text: "[name args...]" headers, "key = value"
// lines, '#' comments. Sections may repeat; order is preserved.

struct Section {
    std::string name;
    std::vector<std::string> args;  // words after the name inside the brackets
    std::vector<std::pair<std::string, std::string>> entries;
    int line = 0;

    bool has(std::string_view key) const {
        for (const auto& [k, _] : entries)
            if (k == key) return true;
        return false;
    }

    const std::string& get(std::string_view key) const {
        for (const auto& [k, v] : entries)
            if (k == key) return v;
        throw ParseError("section [" + name + "] at line " + std::to_string(line) +
                         " is missing key '" + std::string(key) + "'");
    }

    std::string get_or(std::string_view key, std::string fallback) const {
        for (const auto& [k, v] : entries)
            if (k == key) return v;
        return fallback;
    }
};

struct Document {
    std::vector<Section> sections;
    std::string origin;

    std::vector<const Section*> all(std::string_view name) const {
        std::vector<const Section*> out;
        for (const auto& s : sections)
            if (s.name == name) out.push_back(&s);
        return out;
    }

    const Section* find(std::string_view name) const {
        for (const auto& s : sections)
            if (s.name == name) return &s;
        return nullptr;
    }

    const Section& require(std::string_view name) const {
        if (const auto* s = find(name)) return *s;
        throw ParseError(origin + ": missing section [" + std::string(name) + "]");
    }
};

inline std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        const auto end = s.find(sep, start);
        out.push_back(trim(s.substr(start, end == std::string_view::npos ? s.npos : end - start)));
        if (end == std::string_view::npos) break;
        start = end + 1;
    }
    return out;
}

inline Document parse(std::string_view text, std::string origin = "<string>") {
    Document doc;
    doc.origin = std::move(origin);
    std::istringstream in{std::string(text)};
    std::string raw;
    int lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        std::string line = raw;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') {
                throw ParseError(doc.origin + ":" + std::to_string(lineno) + ": unterminated section header");
            }
            std::istringstream words(line.substr(1, line.size() - 2));
            Section s;
            s.line = lineno;
            words >> s.name;
            if (s.name.empty()) throw ParseError(doc.origin + ":" + std::to_string(lineno) + ": empty section name");
            for (std::string w; words >> w;) s.args.push_back(w);
            doc.sections.push_back(std::move(s));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ParseError(doc.origin + ":" + std::to_string(lineno) + ": expected 'key = value'");
        }
        if (doc.sections.empty()) {
            throw ParseError(doc.origin + ":" + std::to_string(lineno) + ": entry before any section");
        }
        doc.sections.back().entries.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return doc;
}

inline std::string read_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ParseError("cannot open " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

inline Document load(const std::string& path) { return parse(read_file(path), path); }

}  // namespace carroll::ini
