#pragma once

#include "switchvi/grid.hpp"

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>

namespace switchvi {

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// 17 significant digits; parses back to the same double.
std::string format_double(double v);

/// Header t,x1..xk,i,j,value; rows ordered by slice, then node, then mode pair.
void write_field_csv(const ValueField& field, std::ostream& out);
void write_field_csv(const ValueField& field, const std::string& path);

/// Reads a CSV written by write_field_csv for the given grid and modes. Coordinates and
/// ordering are checked against the grid.
ValueField read_field_csv(std::istream& in, std::shared_ptr<const Grid> grid, const ModeSpace& modes);
ValueField read_field_csv(const std::string& path, std::shared_ptr<const Grid> grid, const ModeSpace& modes);

/// 64-bit FNV-1a, rendered as 16 hex digits.
std::uint64_t fnv1a(std::string_view bytes);
std::string hex64(std::uint64_t h);
std::string hash_file(const std::string& path);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

} // namespace switchvi
