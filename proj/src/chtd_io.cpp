#include "chtd/detail/byte_io.hpp"
#include "chtd/error.hpp"
#include "chtd/separated_solution.hpp"

namespace chtd {

namespace {

constexpr std::string_view kMagic = "CHTD";

// label length + label, x_min, x_max, n_elem, s, a, p, kind, constraint count + indices
std::size_t descriptor_bytes(const DimSpec& d) {
    return 4 + d.label.size() + 8 + 8 + 4 + 4 + 8 + 4 + 4 + 4 + 4 * d.constraints.constrained().size();
}

}  // namespace

std::size_t chtd_descriptor_bytes(const SeparatedSolution& sol) {
    std::size_t n = 0;
    for (const auto& d : sol.dims()) n += descriptor_bytes(d);
    return n;
}

std::vector<char> encode_chtd(const SeparatedSolution& sol) {
    detail::ByteWriter w;
    w.bytes(kMagic);
    w.u32(kChtdVersion);
    w.u32(static_cast<std::uint32_t>(sol.n_dims()));
    w.u32(static_cast<std::uint32_t>(sol.rank()));
    w.u64(storage_bytes(sol));
    w.u64(0);  // reserved
    for (const auto& d : sol.dims()) {
        w.u32(static_cast<std::uint32_t>(d.label.size()));
        w.bytes(d.label);
        w.f64(d.mesh.x_min());
        w.f64(d.mesh.x_max());
        w.u32(static_cast<std::uint32_t>(d.mesh.n_elem()));
        w.u32(static_cast<std::uint32_t>(d.hyper.s));
        w.f64(d.hyper.a);
        w.u32(static_cast<std::uint32_t>(d.hyper.p));
        w.u32(static_cast<std::uint32_t>(d.hyper.kind));
        w.u32(static_cast<std::uint32_t>(d.constraints.constrained().size()));
        for (std::size_t c : d.constraints.constrained()) w.u32(static_cast<std::uint32_t>(c));
    }
    // Column-major L_d × M blocks, which is also Eigen's storage order.
    for (const auto& f : sol.factors())
        for (Eigen::Index k = 0; k < f.size(); ++k) w.f64(f.data()[k]);
    return w.take();
}

SeparatedSolution decode_chtd(const std::vector<char>& bytes) {
    detail::ByteReader r(bytes);
    if (bytes.size() < kChtdHeaderBytes) throw CorruptFile("truncated header", bytes.size());
    if (r.bytes(4) != kMagic) throw CorruptFile("bad magic", 0);
    std::size_t at = r.offset();
    if (r.u32() != kChtdVersion) throw CorruptFile("unsupported version", at);
    const std::uint32_t n_dims = r.u32();
    const std::uint32_t rank = r.u32();
    at = r.offset();
    const std::uint64_t payload = r.u64();
    r.u64();

    std::vector<DimSpec> dims;
    std::vector<std::size_t> nodes;
    for (std::uint32_t d = 0; d < n_dims; ++d) {
        const std::uint32_t label_len = r.u32();
        std::string label = r.bytes(label_len);
        const std::size_t at_mesh = r.offset();
        const double x_min = r.f64();
        const double x_max = r.f64();
        const std::uint32_t n_elem = r.u32();
        Hyperparams hyper;
        hyper.s = r.u32();
        hyper.a = r.f64();
        hyper.p = r.u32();
        const std::size_t at_kind = r.offset();
        const std::uint32_t kind = r.u32();
        if (kind > static_cast<std::uint32_t>(BasisKind::Chidenn)) throw CorruptFile("unknown basis kind", at_kind);
        hyper.kind = static_cast<BasisKind>(kind);
        const std::uint32_t n_con = r.u32();
        std::vector<std::size_t> con(n_con);
        for (auto& c : con) {
            const std::size_t at_c = r.offset();
            c = r.u32();
            if (c > n_elem) throw CorruptFile("constraint index out of range", at_c);
        }
        try {
            Mesh1D mesh(x_min, x_max, n_elem);
            hyper.validate();
            ConstraintSet cs(mesh.n_nodes(), std::move(con));
            nodes.push_back(mesh.n_nodes());
            dims.push_back(DimSpec{std::move(mesh), hyper, std::move(cs), std::move(label)});
        } catch (const InvalidArgument& e) {
            throw CorruptFile(std::string("invalid dimension descriptor: ") + e.what(), at_mesh);
        }
    }
    if (payload != storage_bytes(rank, nodes)) throw CorruptFile("payload size disagrees with descriptors", at);
    if (r.remaining() != payload) throw CorruptFile("factor payload truncated or oversized", r.offset());

    std::vector<Eigen::MatrixXd> factors;
    for (std::size_t d = 0; d < dims.size(); ++d) {
        Eigen::MatrixXd f(static_cast<Eigen::Index>(nodes[d]), static_cast<Eigen::Index>(rank));
        for (Eigen::Index k = 0; k < f.size(); ++k) f.data()[k] = r.f64();
        factors.push_back(std::move(f));
    }
    try {
        return SeparatedSolution(std::move(dims), std::move(factors));
    } catch (const InvalidArgument& e) {
        throw CorruptFile(std::string("inconsistent solution: ") + e.what(), kChtdHeaderBytes);
    }
}

void export_solution(const SeparatedSolution& sol, const std::filesystem::path& path) {
    detail::write_file(path, encode_chtd(sol));
}

SeparatedSolution import_solution(const std::filesystem::path& path) { return decode_chtd(detail::read_file(path)); }

}  // namespace chtd
