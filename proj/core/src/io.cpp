#include "hopgen/io.hpp"

#include <bit>
#include <charconv>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "hopgen/errors.hpp"

namespace fs = std::filesystem;

namespace hopgen::io {

static_assert(std::endian::native == std::endian::little,
              "container format assumes a little-endian host");

std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t checksum_file(const std::string& path) {
    return fnv1a64(read_text_file(path));
}

std::string checksum_hex(std::uint64_t checksum) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(checksum));
    return buf;
}

namespace {

constexpr char kMagic[6] = {'H', 'G', 'B', 'I', 'N', '\0'};

template <typename T>
void put(std::ostream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& in, const std::string& path) {
    T v;
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw data_error(path + ": truncated container");
    return v;
}

} // namespace

void write_arrays(const std::string& path, const std::vector<NamedArray>& arrays) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw data_error("cannot open for writing: " + path);
    out.write(kMagic, sizeof(kMagic));
    put<std::uint16_t>(out, kContainerVersion);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(arrays.size()));
    for (const auto& a : arrays) {
        put<std::uint32_t>(out, static_cast<std::uint32_t>(a.name.size()));
        out.write(a.name.data(), static_cast<std::streamsize>(a.name.size()));
        put<std::uint64_t>(out, static_cast<std::uint64_t>(a.data.rows()));
        put<std::uint64_t>(out, static_cast<std::uint64_t>(a.data.cols()));
        // row-major on disk
        for (Eigen::Index r = 0; r < a.data.rows(); ++r)
            for (Eigen::Index c = 0; c < a.data.cols(); ++c)
                put<double>(out, a.data(r, c));
    }
    if (!out) throw data_error("write failed: " + path);
}

std::vector<NamedArray> read_arrays(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw data_error("cannot open: " + path);
    char magic[6];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(magic)) != 0)
        throw data_error(path + ": not an array container");
    const auto version = get<std::uint16_t>(in, path);
    if (version != kContainerVersion)
        throw data_error(path + ": unsupported container version " +
                         std::to_string(version));
    const auto count = get<std::uint32_t>(in, path);
    std::vector<NamedArray> arrays;
    arrays.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        const auto name_len = get<std::uint32_t>(in, path);
        std::string name(name_len, '\0');
        in.read(name.data(), name_len);
        if (!in) throw data_error(path + ": truncated container");
        const auto rows = get<std::uint64_t>(in, path);
        const auto cols = get<std::uint64_t>(in, path);
        Eigen::MatrixXd m(static_cast<Eigen::Index>(rows),
                          static_cast<Eigen::Index>(cols));
        for (Eigen::Index r = 0; r < m.rows(); ++r)
            for (Eigen::Index c = 0; c < m.cols(); ++c)
                m(r, c) = get<double>(in, path);
        arrays.push_back({std::move(name), std::move(m)});
    }
    return arrays;
}

const Eigen::MatrixXd& find_array(const std::vector<NamedArray>& arrays,
                                  const std::string& name) {
    for (const auto& a : arrays)
        if (a.name == name) return a.data;
    throw data_error("container has no array named '" + name + "'");
}

std::string fmt_double(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw data_error("cannot open: " + path);
    std::string content((std::istreambuf_iterator<char>(in)),
                        std::istreambuf_iterator<char>());
    return content;
}

void write_text_file(const std::string& path, std::string_view content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw data_error("cannot open for writing: " + path);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw data_error("write failed: " + path);
}

void prepare_out_dir(const std::string& dir, bool force) {
    fs::path p(dir);
    if (fs::exists(p)) {
        if (!fs::is_directory(p))
            throw data_error("output path exists and is not a directory: " + dir);
        if (!fs::is_empty(p) && !force)
            throw data_error("output directory exists and is not empty "
                             "(use --force to overwrite): " + dir);
    } else {
        fs::create_directories(p);
    }
}

} // namespace hopgen::io
