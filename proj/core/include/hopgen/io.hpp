#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace hopgen::io {

// FNV-1a 64-bit, used for input checksums recorded in manifests.
std::uint64_t fnv1a64(std::string_view bytes);
std::uint64_t checksum_file(const std::string& path);
std::string checksum_hex(std::uint64_t checksum);

// Flat binary container of named row-major float64 matrices (little-endian):
//   magic "HGBIN\0" + u16 version, u32 array count, then per array
//   u32 name length, name bytes, u64 rows, u64 cols, rows*cols doubles.
struct NamedArray {
    std::string name;
    Eigen::MatrixXd data;
};
inline constexpr std::uint16_t kContainerVersion = 1;

void write_arrays(const std::string& path, const std::vector<NamedArray>& arrays);
std::vector<NamedArray> read_arrays(const std::string& path);
const Eigen::MatrixXd& find_array(const std::vector<NamedArray>& arrays,
                                  const std::string& name);

// Shortest decimal digits that round-trip a double ("%.17g" fallback);
// integral values print without a trailing ".0".
std::string fmt_double(double v);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, std::string_view content);

// Creates out_dir; an existing non-empty out_dir is refused unless force.
void prepare_out_dir(const std::string& dir, bool force);

} // namespace hopgen::io
