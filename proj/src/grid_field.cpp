#include "chtd/grid_field.hpp"

#include <charconv>
#include <fstream>
#include <iterator>

#include "chtd/detail/byte_io.hpp"
#include "chtd/error.hpp"

namespace chtd {

namespace detail {

std::vector<char> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, const std::vector<char>& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("write failed for " + path.string());
}

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

}  // namespace detail

GridField::GridField(std::vector<std::vector<double>> coordinates, std::string id)
    : coords(std::move(coordinates)), values(grid_size(coords), 0.0), problem_id(std::move(id)) {}

std::vector<std::size_t> GridField::shape() const {
    std::vector<std::size_t> s;
    s.reserve(coords.size());
    for (const auto& c : coords) s.push_back(c.size());
    return s;
}

std::size_t GridField::flat_index(std::span<const std::size_t> idx) const {
    std::size_t flat = 0;
    for (std::size_t d = 0; d < coords.size(); ++d) flat = flat * coords[d].size() + idx[d];
    return flat;
}

bool GridField::same_grid(const GridField& other) const { return coords == other.coords; }

std::size_t grid_size(std::span<const std::vector<double>> coords) {
    if (coords.empty()) return 0;
    std::size_t n = 1;
    for (const auto& c : coords) n *= c.size();
    return n;
}

std::vector<double> linspace(double lo, double hi, std::size_t n) {
    if (n < 2) throw InvalidArgument("linspace needs at least two points");
    std::vector<double> v(n);
    const double step = (hi - lo) / static_cast<double>(n - 1);
    for (std::size_t i = 0; i < n; ++i) v[i] = lo + static_cast<double>(i) * step;
    v.back() = hi;
    return v;
}

void write_grid_csv(const GridField& field, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    const std::size_t nd = field.n_dims();
    for (std::size_t d = 0; d < nd; ++d) out << 'i' << d << ',';
    for (std::size_t d = 0; d < nd; ++d) out << 'x' << d << ',';
    out << "value\n";
    std::vector<std::size_t> idx(nd, 0);
    const auto shape = field.shape();
    for (std::size_t flat = 0; flat < field.size(); ++flat) {
        for (std::size_t d = 0; d < nd; ++d) out << idx[d] << ',';
        for (std::size_t d = 0; d < nd; ++d) out << detail::format_double(field.coords[d][idx[d]]) << ',';
        out << detail::format_double(field.values[flat]) << '\n';
        for (std::size_t d = nd; d-- > 0;) {
            if (++idx[d] < shape[d]) break;
            idx[d] = 0;
        }
    }
}

namespace {
constexpr std::string_view kGridMagic = "GRDF";
constexpr std::uint32_t kGridVersion = 1;
}  // namespace

void write_grid_raw(const GridField& field, const std::filesystem::path& path) {
    detail::ByteWriter w;
    w.bytes(kGridMagic);
    w.u32(kGridVersion);
    w.u32(static_cast<std::uint32_t>(field.n_dims()));
    for (const auto& c : field.coords) w.u64(c.size());
    for (const auto& c : field.coords)
        for (double x : c) w.f64(x);
    for (double v : field.values) w.f64(v);
    detail::write_file(path, w.buffer());
}

GridField read_grid_raw(const std::filesystem::path& path) {
    const auto buf = detail::read_file(path);
    detail::ByteReader r(buf);
    if (r.bytes(4) != kGridMagic) throw CorruptFile("bad grid magic", 0);
    const std::size_t at_version = r.offset();
    if (r.u32() != kGridVersion) throw CorruptFile("unsupported grid version", at_version);
    const std::uint32_t nd = r.u32();
    std::vector<std::size_t> shape(nd);
    for (auto& s : shape) s = r.u64();
    std::vector<std::vector<double>> coords(nd);
    for (std::uint32_t d = 0; d < nd; ++d) {
        if (r.remaining() / 8 < shape[d]) throw CorruptFile("truncated coordinates", r.offset());
        coords[d].resize(shape[d]);
        for (auto& x : coords[d]) x = r.f64();
    }
    GridField field(std::move(coords));
    if (r.remaining() != field.size() * 8) throw CorruptFile("value payload size mismatch", r.offset());
    for (auto& v : field.values) v = r.f64();
    return field;
}

}  // namespace chtd
