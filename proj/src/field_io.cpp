#include "switchvi/field_io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <vector>

namespace switchvi {

std::string format_double(double v) {
    char buf[40];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
    return {buf, res.ptr};
}

void write_field_csv(const ValueField& field, std::ostream& out) {
    const Grid& g = field.grid();
    const ModeSpace& ms = field.modes();
    std::string line = "t";
    for (int c = 1; c <= g.dim(); ++c) line += ",x" + std::to_string(c);
    line += ",i,j,value\n";
    out << line;
    for (std::size_t s = 0; s < g.slices(); ++s) {
        const std::string t = format_double(g.time(s));
        for (std::size_t n = 0; n < g.node_count(); ++n) {
            std::string prefix = t;
            for (double x : g.node_coordinates(n)) {
                prefix += ',';
                prefix += format_double(x);
            }
            for (std::size_t p = 0; p < static_cast<std::size_t>(ms.size()); ++p) {
                const ModePair mp = ms.pair(p);
                line = prefix;
                line += ',' + std::to_string(mp.i) + ',' + std::to_string(mp.j) + ',';
                line += format_double(field.at(s, p, n));
                line += '\n';
                out << line;
            }
        }
    }
}

void write_field_csv(const ValueField& field, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path + " for writing");
    write_field_csv(field, out);
    if (!out) throw IoError("failed writing " + path);
}

namespace {

double parse_cell(std::string_view s, std::size_t line) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
        throw IoError("line " + std::to_string(line) + ": bad number '" + std::string(s) + "'");
    }
    return v;
}

} // namespace

ValueField read_field_csv(std::istream& in, std::shared_ptr<const Grid> grid, const ModeSpace& modes) {
    ValueField field(grid, modes);
    const Grid& g = *grid;
    const std::size_t k = static_cast<std::size_t>(g.dim());
    std::string line;
    if (!std::getline(in, line)) throw IoError("empty CSV");
    std::string header = "t";
    for (std::size_t c = 1; c <= k; ++c) header += ",x" + std::to_string(c);
    header += ",i,j,value";
    if (line != header) throw IoError("unexpected CSV header '" + line + "'");

    std::vector<std::string_view> cells;
    std::size_t row = 0;
    const std::size_t lambda = static_cast<std::size_t>(modes.size());
    const std::size_t expected = g.slices() * g.node_count() * lambda;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const std::size_t lineno = row + 2;
        if (row >= expected) throw IoError("line " + std::to_string(lineno) + ": more rows than the grid holds");
        cells.clear();
        std::string_view rest(line);
        while (true) {
            const auto pos = rest.find(',');
            cells.push_back(rest.substr(0, pos));
            if (pos == std::string_view::npos) break;
            rest.remove_prefix(pos + 1);
        }
        if (cells.size() != k + 4) throw IoError("line " + std::to_string(lineno) + ": wrong number of columns");
        const std::size_t p = row % lambda;
        const std::size_t n = (row / lambda) % g.node_count();
        const std::size_t s = row / (lambda * g.node_count());
        const ModePair mp = modes.pair(p);
        bool ok = parse_cell(cells[0], lineno) == g.time(s);
        for (std::size_t c = 0; c < k; ++c) ok = ok && parse_cell(cells[1 + c], lineno) == g.node_coordinates(n)[c];
        ok = ok && parse_cell(cells[k + 1], lineno) == mp.i && parse_cell(cells[k + 2], lineno) == mp.j;
        if (!ok) throw IoError("line " + std::to_string(lineno) + ": row does not match the grid ordering");
        field.at(s, p, n) = parse_cell(cells[k + 3], lineno);
        ++row;
    }
    if (row != expected) {
        throw IoError("CSV has " + std::to_string(row) + " rows, expected " + std::to_string(expected));
    }
    return field;
}

ValueField read_field_csv(const std::string& path, std::shared_ptr<const Grid> grid, const ModeSpace& modes) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    return read_field_csv(in, std::move(grid), modes);
}

std::uint64_t fnv1a(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex64(std::uint64_t h) {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int q = 15; q >= 0; --q) {
        out[static_cast<std::size_t>(q)] = digits[h & 0xF];
        h >>= 4;
    }
    return out;
}

std::string hash_file(const std::string& path) {
    return hex64(fnv1a(read_text_file(path)));
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out << content;
    if (!out) throw IoError("failed writing " + path);
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace switchvi
