#include "achronal/io.hpp"

#include "achronal/error.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace achronal {

namespace {

constexpr char magic[4] = {'A', 'C', 'H', 'R'};
constexpr std::uint32_t layout_slice = 1;
constexpr std::uint32_t layout_scalar = 2;

template <class T>
T to_le(T v) {
    if constexpr (std::endian::native == std::endian::big) {
        unsigned char b[sizeof(T)];
        std::memcpy(b, &v, sizeof(T));
        for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(b[i], b[sizeof(T) - 1 - i]);
        std::memcpy(&v, b, sizeof(T));
    }
    return v;
}

class Writer {
public:
    void bytes(const void* p, std::size_t n) {
        const auto* c = static_cast<const unsigned char*>(p);
        buf_.insert(buf_.end(), c, c + n);
    }
    void u32(std::uint32_t v) { v = to_le(v), bytes(&v, 4); }
    void f64(double v) { v = to_le(v), bytes(&v, 8); }
    void header() { bytes(magic, 4), u32(achr_version); }

    void write(const std::filesystem::path& path) const {
        std::ofstream os(path, std::ios::binary | std::ios::trunc);
        if (!os) throw Error(ErrorKind::io, "cannot open " + path.string() + " for writing");
        os.write(reinterpret_cast<const char*>(buf_.data()), std::streamsize(buf_.size()));
        if (!os) throw Error(ErrorKind::io, "write failed: " + path.string());
    }

private:
    std::vector<unsigned char> buf_;
};

class Reader {
public:
    explicit Reader(const std::filesystem::path& path) : path_(path) {
        std::ifstream is(path, std::ios::binary);
        if (!is) throw Error(ErrorKind::io, "cannot open " + path.string());
        buf_.assign(std::istreambuf_iterator<char>(is), {});
    }

    void bytes(void* p, std::size_t n) {
        if (pos_ + n > buf_.size()) fail("truncated file");
        std::memcpy(p, buf_.data() + pos_, n);
        pos_ += n;
    }
    std::uint32_t u32() {
        std::uint32_t v;
        bytes(&v, 4);
        return to_le(v);
    }
    double f64() {
        double v;
        bytes(&v, 8);
        return to_le(v);
    }
    void header() {
        char m[4];
        bytes(m, 4);
        if (std::memcmp(m, magic, 4) != 0) fail("bad magic");
        const std::uint32_t v = u32();
        if (v != achr_version) fail("unsupported version " + std::to_string(v));
    }
    void layout(std::uint32_t want) {
        if (u32() != want) fail("unexpected layout");
    }
    void expect_remaining(std::size_t n) {
        if (buf_.size() - pos_ != n) fail("size does not match header");
    }
    [[noreturn]] void fail(const std::string& what) const {
        throw Error(ErrorKind::io, path_.string() + ": " + what);
    }

private:
    std::filesystem::path path_;
    std::vector<char> buf_;
    std::size_t pos_ = 0;
};

void write_grid(Writer& w, const SpatialGrid& g) {
    for (int a = 0; a < 3; ++a) w.u32(std::uint32_t(g.n[a]));
    w.f64(g.spacing);
    for (int a = 0; a < 3; ++a) w.f64(g.origin[a]);
}

SpatialGrid read_grid(Reader& r) {
    SpatialGrid g;
    for (int a = 0; a < 3; ++a) {
        const std::uint32_t n = r.u32();
        if (n == 0 || n > (1u << 16)) r.fail("bad dimension");
        g.n[a] = int(n);
    }
    g.spacing = r.f64();
    for (int a = 0; a < 3; ++a) g.origin[a] = r.f64();
    if (!(g.spacing > 0.0) || !g.origin.allFinite()) r.fail("bad grid geometry");
    return g;
}

}  // namespace

void save_packet(const std::filesystem::path& path, const WavePacket& phi) {
    Writer w;
    w.header();
    w.f64(phi.mass());
    for (int a = 0; a < 3; ++a) {
        w.u32(std::uint32_t(phi.grid().n()));
        w.f64(phi.grid().extent());
    }
    for (const cplx& z : phi.amplitudes()) w.f64(z.real()), w.f64(z.imag());
    w.write(path);
}

WavePacket load_packet(const std::filesystem::path& path) {
    Reader r(path);
    r.header();
    const double mass = r.f64();
    std::uint32_t n[3];
    double P[3];
    for (int a = 0; a < 3; ++a) n[a] = r.u32(), P[a] = r.f64();
    if (n[0] != n[1] || n[0] != n[2] || P[0] != P[1] || P[0] != P[2]) r.fail("only cubic grids are supported");
    if (n[0] == 0 || n[0] > 1024) r.fail("bad dimension");
    const std::size_t count = std::size_t(n[0]) * n[0] * n[0];
    r.expect_remaining(16 * count);
    std::vector<cplx> amp(count);
    for (auto& z : amp) {
        const double re = r.f64();
        z = cplx(re, r.f64());
    }
    return WavePacket(MomentumGrid(int(n[0]), P[0]), mass, std::move(amp));
}

void save_slice(const std::filesystem::path& path, const Slice& s) {
    Writer w;
    w.header();
    w.u32(layout_slice);
    w.f64(s.x0);
    write_grid(w, s.grid);
    for (std::size_t i = 0; i < s.grid.size(); ++i)
        for (int mu = 0; mu < 4; ++mu) w.f64(s.J[mu][i]);
    w.write(path);
}

Slice load_slice(const std::filesystem::path& path) {
    Reader r(path);
    r.header();
    r.layout(layout_slice);
    Slice s;
    s.x0 = r.f64();
    s.grid = read_grid(r);
    r.expect_remaining(32 * s.grid.size());
    for (auto& c : s.J) c.resize(s.grid.size());
    for (std::size_t i = 0; i < s.grid.size(); ++i)
        for (int mu = 0; mu < 4; ++mu) s.J[mu][i] = r.f64();
    return s;
}

void save_scalar(const std::filesystem::path& path, const ScalarField& f) {
    if (f.values.size() != f.grid.size()) throw Error(ErrorKind::invalid_argument, "scalar field size mismatch");
    Writer w;
    w.header();
    w.u32(layout_scalar);
    write_grid(w, f.grid);
    for (double v : f.values) w.f64(v);
    w.write(path);
}

ScalarField load_scalar(const std::filesystem::path& path) {
    Reader r(path);
    r.header();
    r.layout(layout_scalar);
    ScalarField f;
    f.grid = read_grid(r);
    r.expect_remaining(8 * f.grid.size());
    f.values.resize(f.grid.size());
    for (double& v : f.values) v = r.f64();
    return f;
}

}  // namespace achronal
