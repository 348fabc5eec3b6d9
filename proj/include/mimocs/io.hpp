#pragma once

#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "mimocs/errors.hpp"
#include "mimocs/radar_config.hpp"
#include "mimocs/signals.hpp"

namespace mimocs::io {

/// Ordered flat `key = value` records; '#' starts a comment line.
class KeyValueFile {
public:
    void set(const std::string& key, const std::string& value) {
        if (!values_.contains(key)) order_.push_back(key);
        values_[key] = value;
    }
    void set(const std::string& key, const char* value) { set(key, std::string(value)); }
    void set(const std::string& key, bool value) { set(key, std::string(value ? "true" : "false")); }
    void set(const std::string& key, double value) { set(key, format_double(value)); }
    template <class Int>
        requires std::is_integral_v<Int>
    void set(const std::string& key, Int value) {
        set(key, std::to_string(value));
    }

    bool contains(const std::string& key) const { return values_.contains(key); }
    const std::vector<std::string>& keys() const { return order_; }

    const std::string& get(const std::string& key) const {
        auto it = values_.find(key);
        if (it == values_.end()) throw ParameterError("missing key '" + key + "'");
        return it->second;
    }
    std::string get_or(const std::string& key, const std::string& fallback) const {
        return contains(key) ? get(key) : fallback;
    }
    double get_double(const std::string& key) const { return std::stod(get(key)); }
    std::int64_t get_int(const std::string& key) const { return std::stoll(get(key)); }
    std::uint64_t get_uint(const std::string& key) const { return std::stoull(get(key)); }
    bool get_bool(const std::string& key) const {
        const auto& v = get(key);
        if (v == "true" || v == "1") return true;
        if (v == "false" || v == "0") return false;
        throw ParameterError("key '" + key + "' is not a boolean: " + v);
    }

    std::string to_string() const {
        std::string out;
        for (const auto& k : order_) out += k + " = " + values_.at(k) + "\n";
        return out;
    }

    static KeyValueFile parse(const std::string& text, const std::string& origin = "<text>") {
        KeyValueFile kv;
        std::istringstream in(text);
        std::string line;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            const auto first = line.find_first_not_of(" \t\r");
            if (first == std::string::npos || line[first] == '#') continue;
            const auto eq = line.find('=');
            if (eq == std::string::npos)
                throw ParameterError(origin + ":" + std::to_string(lineno) + ": expected 'key = value'");
            kv.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
        }
        return kv;
    }

    static std::string format_double(double v) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return buf;
    }

    static std::string trim(const std::string& s) {
        const auto b = s.find_first_not_of(" \t\r\"");
        if (b == std::string::npos) return {};
        const auto e = s.find_last_not_of(" \t\r\"");
        return s.substr(b, e - b + 1);
    }

private:
    std::vector<std::string> order_;
    std::map<std::string, std::string> values_;
};

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(path.string(), "cannot open for reading");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const std::filesystem::path& path, const std::string& contents) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(path.string(), "cannot open for writing");
    out << contents;
    if (!out) throw IoError(path.string(), "write failed");
}

inline KeyValueFile read_key_values(const std::filesystem::path& path) {
    return KeyValueFile::parse(read_file(path), path.string());
}

inline void write_key_values(const std::filesystem::path& path, const KeyValueFile& kv, const std::string& header = {}) {
    write_file(path, (header.empty() ? std::string{} : "# " + header + "\n") + kv.to_string());
}

/// Splits on commas, trimming blanks; "" gives an empty list.
inline std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::string cur;
    std::string body = KeyValueFile::trim(text);
    if (!body.empty() && body.front() == '[' && body.back() == ']') body = body.substr(1, body.size() - 2);
    std::istringstream in(body);
    while (std::getline(in, cur, ',')) {
        cur = KeyValueFile::trim(cur);
        if (!cur.empty()) out.push_back(cur);
    }
    return out;
}

// Complex vector interchange.
//
// Text: one `re,im` pair per line, %.17g, so values round-trip exactly.
// Binary: 8-byte magic "MIMOCSV1", little-endian uint64 count, then
// interleaved little-endian float64 re/im.

inline constexpr char kBinaryMagic[8] = {'M', 'I', 'M', 'O', 'C', 'S', 'V', '1'};

inline std::string format_complex_text(const cvec& v) {
    std::string out;
    char buf[96];
    for (std::int64_t k = 0; k < v.size(); ++k) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", v[k].real(), v[k].imag());
        out += buf;
    }
    return out;
}

inline cvec parse_complex_text(const std::string& text, const std::string& origin = "<text>") {
    std::vector<cplx> vals;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos) throw IoError(origin, "line " + std::to_string(lineno) + ": expected 're,im'");
        try {
            vals.emplace_back(std::stod(line.substr(0, comma)), std::stod(line.substr(comma + 1)));
        } catch (const std::exception&) {
            throw IoError(origin, "line " + std::to_string(lineno) + ": malformed number");
        }
    }
    cvec v(static_cast<std::int64_t>(vals.size()));
    for (std::size_t k = 0; k < vals.size(); ++k) v[static_cast<std::int64_t>(k)] = vals[k];
    return v;
}

namespace detail {
inline void put_le64(std::string& out, std::uint64_t v) {
    for (int b = 0; b < 8; ++b) out.push_back(static_cast<char>((v >> (8 * b)) & 0xff));
}
inline std::uint64_t get_le64(const std::string& in, std::size_t pos) {
    std::uint64_t v = 0;
    for (int b = 0; b < 8; ++b) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[pos + b])) << (8 * b);
    return v;
}
} // namespace detail

inline std::string format_complex_binary(const cvec& v) {
    std::string out(kBinaryMagic, sizeof kBinaryMagic);
    detail::put_le64(out, static_cast<std::uint64_t>(v.size()));
    for (std::int64_t k = 0; k < v.size(); ++k) {
        detail::put_le64(out, std::bit_cast<std::uint64_t>(v[k].real()));
        detail::put_le64(out, std::bit_cast<std::uint64_t>(v[k].imag()));
    }
    return out;
}

inline bool is_complex_binary(const std::string& data) {
    return data.size() >= 16 && std::memcmp(data.data(), kBinaryMagic, sizeof kBinaryMagic) == 0;
}

inline cvec parse_complex_binary(const std::string& data, const std::string& origin = "<binary>") {
    if (!is_complex_binary(data)) throw IoError(origin, "missing binary vector header");
    const auto n = detail::get_le64(data, 8);
    if (data.size() != 16 + 16 * n) throw IoError(origin, "binary vector length does not match its header");
    cvec v(static_cast<std::int64_t>(n));
    for (std::uint64_t k = 0; k < n; ++k)
        v[static_cast<std::int64_t>(k)] = {std::bit_cast<double>(detail::get_le64(data, 16 + 16 * k)),
                                          std::bit_cast<double>(detail::get_le64(data, 24 + 16 * k))};
    return v;
}

/// Reads either format, detected by the magic header.
inline cvec read_complex_vector(const std::filesystem::path& path) {
    const auto data = read_file(path);
    return is_complex_binary(data) ? parse_complex_binary(data, path.string()) : parse_complex_text(data, path.string());
}

inline void write_complex_vector(const std::filesystem::path& path, const cvec& v, bool binary = false) {
    write_file(path, binary ? format_complex_binary(v) : format_complex_text(v));
}

} // namespace mimocs::io
