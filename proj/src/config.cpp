#include "achronal/config.hpp"

#include "achronal/error.hpp"
#include "achronal/io.hpp"

#include <fstream>
#include <set>

namespace achronal {

namespace {

[[noreturn]] void bad(const std::string& where, const std::string& what) {
    throw Error(ErrorKind::config, where + ": " + what);
}

// Reads keys of one JSON object and rejects anything left unread.
class Fields {
public:
    Fields(const json& j, std::string where) : j_(j), where_(std::move(where)) {
        if (!j.is_object()) bad(where_, "expected an object");
    }

    bool has(const std::string& k) const { return j_.contains(k); }

    const json& raw(const std::string& k) {
        seen_.insert(k);
        return j_.at(k);
    }

    template <class T>
    void get(const std::string& k, T& out) {
        if (!has(k)) return;
        const json& v = raw(k);
        try {
            if constexpr (std::is_same_v<T, double>) {
                if (!v.is_number()) throw std::runtime_error("number expected");
                out = v.get<double>();
            } else if constexpr (std::is_same_v<T, int> || std::is_same_v<T, std::size_t> ||
                                 std::is_same_v<T, std::uint64_t>) {
                if (!v.is_number_integer()) throw std::runtime_error("integer expected");
                if constexpr (!std::is_same_v<T, int>)
                    if (!v.is_number_unsigned()) throw std::runtime_error("non-negative integer expected");
                out = v.get<T>();
            } else if constexpr (std::is_same_v<T, bool>) {
                if (!v.is_boolean()) throw std::runtime_error("boolean expected");
                out = v.get<bool>();
            } else if constexpr (std::is_same_v<T, std::string>) {
                if (!v.is_string()) throw std::runtime_error("string expected");
                out = v.get<std::string>();
            } else if constexpr (std::is_same_v<T, Vec3>) {
                out = vec3(v, k);
            } else if constexpr (std::is_same_v<T, std::vector<double>>) {
                if (!v.is_array()) throw std::runtime_error("array expected");
                out.clear();
                for (const auto& e : v) {
                    if (!e.is_number()) throw std::runtime_error("numbers expected");
                    out.push_back(e.get<double>());
                }
            } else {
                static_assert(sizeof(T) == 0, "unsupported field type");
            }
        } catch (const Error&) {
            throw;
        } catch (const std::exception& e) {
            bad(where_ + "." + k, e.what());
        }
    }

    Vec3 vec3(const json& v, const std::string& k) const {
        if (!v.is_array() || v.size() != 3) bad(where_ + "." + k, "expected [x, y, z]");
        Vec3 out;
        for (int a = 0; a < 3; ++a) {
            if (!v[a].is_number()) bad(where_ + "." + k, "expected numbers");
            out[a] = v[a].get<double>();
        }
        return out;
    }

    void finish() const {
        for (const auto& [k, v] : j_.items())
            if (!seen_.count(k)) bad(where_, "unknown key '" + k + "'");
    }

    const std::string& where() const { return where_; }

private:
    const json& j_;
    std::string where_;
    std::set<std::string> seen_;
};

json arr(const Vec3& v) { return json::array({v[0], v[1], v[2]}); }

// canonical descriptor with every parameter present
json canonical_surface(const json& j, const std::string& where) {
    Fields f(j, where);
    std::string type;
    f.get("type", type);
    json out;
    out["type"] = type;
    if (type == "flat") {
        double t0 = 0.0;
        f.get("t0", t0);
        out["t0"] = t0;
    } else if (type == "tilted") {
        Vec3 e = Vec3::Zero();
        double offset = 0.0;
        f.get("e", e);
        f.get("offset", offset);
        out["e"] = arr(e);
        out["offset"] = offset;
    } else if (type == "bump") {
        double lambda = 0.0, scale = 1.0, offset = 0.0;
        f.get("lambda", lambda);
        f.get("scale", scale);
        f.get("offset", offset);
        out["lambda"] = lambda;
        out["scale"] = scale;
        out["offset"] = offset;
    } else if (type == "cone") {
        double gamma = 0.0, offset = 0.0;
        Vec3 apex = Vec3::Zero();
        f.get("gamma", gamma);
        f.get("apex", apex);
        f.get("offset", offset);
        out["gamma"] = gamma;
        out["apex"] = arr(apex);
        out["offset"] = offset;
    } else if (type == "sampled") {
        std::string file;
        f.get("file", file);
        if (file.empty()) bad(where, "sampled surface needs 'file'");
        out["file"] = file;
    } else {
        bad(where, "unknown surface type '" + type + "'");
    }
    double flatten = 1.0;
    f.get("flatten", flatten);
    if (!(flatten >= 0.0 && flatten <= 1.0)) bad(where, "flatten must lie in [0, 1]");
    out["flatten"] = flatten;
    f.finish();
    return out;
}

json canonical_mask(const json& j, const std::string& where) {
    Fields f(j, where);
    std::string type;
    f.get("type", type);
    json out;
    out["type"] = type;
    if (type == "full" || type == "empty") {
    } else if (type == "ball") {
        Vec3 c = Vec3::Zero();
        double r = 1.0;
        f.get("center", c);
        f.get("radius", r);
        out["center"] = arr(c);
        out["radius"] = r;
    } else if (type == "box") {
        Vec3 lo = -Vec3::Ones(), hi = Vec3::Ones();
        f.get("lo", lo);
        f.get("hi", hi);
        out["lo"] = arr(lo);
        out["hi"] = arr(hi);
    } else if (type == "half_space") {
        Vec3 n = Vec3::UnitX();
        double c = 0.0;
        f.get("normal", n);
        f.get("c", c);
        out["normal"] = arr(n);
        out["c"] = c;
    } else if (type == "complement") {
        if (!f.has("of")) bad(where, "complement needs 'of'");
        out["of"] = canonical_mask(f.raw("of"), where + ".of");
    } else if (type == "union" || type == "intersection") {
        if (!f.has("of") || !f.raw("of").is_array() || f.raw("of").empty())
            bad(where, type + " needs a non-empty 'of' list");
        json parts = json::array();
        for (std::size_t i = 0; i < f.raw("of").size(); ++i)
            parts.push_back(canonical_mask(f.raw("of")[i], where + ".of[" + std::to_string(i) + "]"));
        out["of"] = parts;
    } else {
        bad(where, "unknown mask type '" + type + "'");
    }
    f.finish();
    return out;
}

json canonical_region(const json& j, const std::string& where) {
    Fields f(j, where);
    json out;
    out["surface"] = f.has("surface") ? canonical_surface(f.raw("surface"), where + ".surface")
                                      : canonical_surface(json{{"type", "flat"}}, where + ".surface");
    out["mask"] = f.has("mask") ? canonical_mask(f.raw("mask"), where + ".mask")
                                : canonical_mask(json{{"type", "full"}}, where + ".mask");
    f.finish();
    return out;
}

Vec3 vec(const json& j) { return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()}; }

GridConfig grid_from(const json& j, const std::string& where) {
    GridConfig g;
    Fields f(j, where);
    f.get("N", g.N);
    f.get("P", g.P);
    f.finish();
    if (g.N < 4 || g.N % 2 != 0) bad(where, "N must be even and at least 4");
    if (!(g.P > 0.0)) bad(where, "P must be positive");
    return g;
}

json to_json(const GridConfig& g) { return {{"N", g.N}, {"P", g.P}}; }

}  // namespace

PoincareElement GroupConfig::element() const {
    const PoincareElement t = PoincareElement::translation(translation);
    const PoincareElement b = PoincareElement::lorentz(LorentzTransform::boost(boost_axis.normalized(), rapidity));
    const PoincareElement r =
        PoincareElement::lorentz(LorentzTransform::rotation(rotation_axis.normalized(), angle));
    return t * b * r;
}

Tolerances Tolerances::scaled(double s) const {
    Tolerances t = *this;
    for (double* v : {&t.normalize, &t.invariance, &t.covariance, &t.translation, &t.kernel_pd, &t.logic, &t.oracle})
        *v *= s;
    return t;
}

GroupConfig group_from_json(const json& j) {
    GroupConfig g;
    Fields f(j, "group");
    std::vector<double> a{0, 0, 0, 0};
    f.get("translation", a);
    if (a.size() != 4) bad("group.translation", "expected [a0, a1, a2, a3]");
    g.translation = FourVector(a[0], a[1], a[2], a[3]);
    f.get("boost_axis", g.boost_axis);
    f.get("rapidity", g.rapidity);
    f.get("rotation_axis", g.rotation_axis);
    f.get("angle", g.angle);
    f.finish();
    if (g.boost_axis.norm() == 0.0 || g.rotation_axis.norm() == 0.0) bad("group", "axes must be non-zero");
    return g;
}

json to_json(const GroupConfig& g) {
    return {{"translation", {g.translation.t, g.translation.x[0], g.translation.x[1], g.translation.x[2]}},
            {"boost_axis", arr(g.boost_axis)},
            {"rapidity", g.rapidity},
            {"rotation_axis", arr(g.rotation_axis)},
            {"angle", g.angle}};
}

AchronalSurface surface_from_json(const json& j, const std::filesystem::path& base_dir) {
    const json c = canonical_surface(j, "surface");
    const std::string type = c["type"];
    AchronalSurface s = AchronalSurface::flat();
    if (type == "flat") {
        s = AchronalSurface::flat(c["t0"].get<double>());
    } else if (type == "tilted") {
        s = AchronalSurface::tilted(vec(c["e"]), c["offset"].get<double>());
    } else if (type == "bump") {
        s = AchronalSurface::bump(c["lambda"].get<double>(), c["scale"].get<double>(), c["offset"].get<double>());
    } else if (type == "cone") {
        s = AchronalSurface::cone(c["gamma"].get<double>(), vec(c["apex"]), c["offset"].get<double>());
    } else {
        std::filesystem::path p = c["file"].get<std::string>();
        if (p.is_relative()) p = base_dir / p;
        ScalarField f = load_scalar(p);
        s = AchronalSurface::sampled(f.grid, std::move(f.values));
    }
    const double g = c["flatten"].get<double>();
    return g == 1.0 ? s : s.flatten(g);
}

Mask mask_from_json(const json& j) {
    const json c = canonical_mask(j, "mask");
    const std::string type = c["type"];
    if (type == "full") return Mask::full();
    if (type == "empty") return Mask::empty();
    if (type == "ball") return Mask::ball(vec(c["center"]), c["radius"].get<double>());
    if (type == "box") return Mask::box(vec(c["lo"]), vec(c["hi"]));
    if (type == "half_space") return Mask::half_space(vec(c["normal"]), c["c"].get<double>());
    if (type == "complement") return mask_from_json(c["of"]).complement();
    Mask m = mask_from_json(c["of"][0]);
    for (std::size_t i = 1; i < c["of"].size(); ++i)
        m = type == "union" ? Mask::unite(m, mask_from_json(c["of"][i])) : Mask::intersect(m, mask_from_json(c["of"][i]));
    return m;
}

Region region_from_json(const json& j, const std::filesystem::path& base_dir) {
    const json c = canonical_region(j, "region");
    return {surface_from_json(c["surface"], base_dir), mask_from_json(c["mask"])};
}

ExperimentConfig parse_config(const json& j, const std::filesystem::path& base_dir) {
    ExperimentConfig c;
    c.base_dir = base_dir;
    Fields f(j, "config");
    f.get("mass", c.mass);
    if (!(c.mass > 0.0)) bad("config.mass", "must be positive");
    if (f.has("grid")) c.grid = grid_from(f.raw("grid"), "config.grid");
    if (f.has("refine_grid") && !f.raw("refine_grid").is_null())
        c.refine_grid = grid_from(f.raw("refine_grid"), "config.refine_grid");

    if (f.has("packet")) {
        Fields p(f.raw("packet"), "config.packet");
        PacketParams& pp = c.packet.params;
        std::string kind = to_string(pp.kind);
        p.get("kind", kind);
        try {
            pp.kind = packet_kind_from_string(kind);
        } catch (const Error& e) {
            bad("config.packet.kind", e.what());
        }
        if (pp.kind == PacketKind::custom) bad("config.packet.kind", "custom packets need code, use 'file'");
        p.get("sigma", pp.sigma);
        p.get("center", pp.center);
        p.get("support_radius", pp.support_radius);
        p.get("core_radius", pp.core_radius);
        p.get("rapidity", pp.rapidity);
        p.get("boost_axis", pp.boost_axis);
        p.get("position", pp.position);
        std::vector<double> amp{pp.amplitude.real(), pp.amplitude.imag()};
        p.get("amplitude", amp);
        if (amp.size() != 2) bad("config.packet.amplitude", "expected [re, im]");
        pp.amplitude = cplx(amp[0], amp[1]);
        p.get("zero", c.packet.zero);
        p.get("file", c.packet.file);
        p.finish();
    }

    f.get("kernel", c.kernel);
    try {
        (void)parse_kernel(c.kernel, c.mass);
    } catch (const Error& e) {
        bad("config.kernel", e.what());
    }

    if (f.has("surfaces")) {
        const json& s = f.raw("surfaces");
        if (!s.is_array()) bad("config.surfaces", "expected a list");
        for (std::size_t i = 0; i < s.size(); ++i)
            c.surfaces.push_back(canonical_surface(s[i], "config.surfaces[" + std::to_string(i) + "]"));
    } else {
        c.surfaces = {canonical_surface(json{{"type", "flat"}}, "default")};
    }
    if (f.has("regions")) {
        const json& r = f.raw("regions");
        if (!r.is_array()) bad("config.regions", "expected a list");
        for (std::size_t i = 0; i < r.size(); ++i)
            c.regions.push_back(canonical_region(r[i], "config.regions[" + std::to_string(i) + "]"));
    }
    if (f.has("group")) {
        const json& g = f.raw("group");
        if (!g.is_array()) bad("config.group", "expected a list");
        for (const auto& e : g) c.group.push_back(group_from_json(e));
    }
    f.get("gamma_sweep", c.gamma_sweep);
    for (double g : c.gamma_sweep)
        if (!(g >= 0.0 && g <= 1.0)) bad("config.gamma_sweep", "values must lie in [0, 1]");

    if (f.has("tolerances")) {
        Fields t(f.raw("tolerances"), "config.tolerances");
        Tolerances& tol = c.tolerances;
        t.get("normalize", tol.normalize);
        t.get("invariance", tol.invariance);
        t.get("covariance", tol.covariance);
        t.get("translation", tol.translation);
        t.get("kernel_pd", tol.kernel_pd);
        t.get("logic", tol.logic);
        t.get("oracle", tol.oracle);
        t.finish();
    }
    f.get("backend", c.backend);
    if (c.backend != "direct" && c.backend != "fast") bad("config.backend", "expected 'direct' or 'fast'");
    f.get("fast_tolerance", c.fast_tolerance);
    f.get("seed", c.seed);
    f.get("output", c.output);

    if (f.has("localization")) {
        Fields l(f.raw("localization"), "config.localization");
        LocalizationOptions& o = c.localization;
        l.get("oversample", o.oversample);
        l.get("window_nodes", o.window_nodes);
        l.get("refine", o.refine);
        l.get("pad", o.pad);
        l.get("max_local_nodes", o.max_local_nodes);
        l.get("subsamples", o.subsamples);
        l.get("centroid_correction", o.centroid_correction);
        l.get("chebyshev_tolerance", o.chebyshev_tolerance);
        l.get("tail_budget", o.tail_budget);
        l.finish();
    }
    if (f.has("kernel_pd")) {
        Fields k(f.raw("kernel_pd"), "config.kernel_pd");
        k.get("points", c.kernel_pd_points);
        k.get("radius", c.kernel_pd_radius);
        k.finish();
        if (c.kernel_pd_points < 1) bad("config.kernel_pd.points", "must be positive");
    }
    if (f.has("logic")) {
        Fields l(f.raw("logic"), "config.logic");
        LogicConfig& lc = c.logic;
        l.get("t0", lc.t0);
        l.get("center", lc.center);
        l.get("radius", lc.radius);
        l.get("samples", lc.samples);
        l.get("rcl_samples", lc.rcl_samples);
        l.get("cone_gammas", lc.cone_gammas);
        l.finish();
        if (!(lc.radius > 0.0)) bad("config.logic.radius", "must be positive");
        for (double g : lc.cone_gammas)
            if (!(g > 0.0 && g < 1.0)) bad("config.logic.cone_gammas", "values must lie in (0, 1)");
    }
    if (f.has("field_dump")) {
        Fields d(f.raw("field_dump"), "config.field_dump");
        d.get("times", c.dump_times);
        d.get("points", c.dump_points);
        d.finish();
    }
    f.finish();
    return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw Error(ErrorKind::config, "cannot open config " + path.string());
    json j;
    try {
        j = json::parse(is, nullptr, true, true);
    } catch (const json::parse_error& e) {
        throw Error(ErrorKind::config, path.string() + ": " + e.what());
    }
    return parse_config(j, path.parent_path());
}

json to_json(const ExperimentConfig& c) {
    json j;
    j["mass"] = c.mass;
    j["grid"] = to_json(c.grid);
    j["refine_grid"] = c.refine_grid ? to_json(*c.refine_grid) : json(nullptr);
    const PacketParams& p = c.packet.params;
    j["packet"] = {{"kind", to_string(p.kind)},
                   {"sigma", p.sigma},
                   {"center", arr(p.center)},
                   {"support_radius", p.support_radius},
                   {"core_radius", p.core_radius},
                   {"rapidity", p.rapidity},
                   {"boost_axis", arr(p.boost_axis)},
                   {"position", arr(p.position)},
                   {"amplitude", {p.amplitude.real(), p.amplitude.imag()}},
                   {"zero", c.packet.zero},
                   {"file", c.packet.file}};
    j["kernel"] = c.kernel;
    j["surfaces"] = c.surfaces;
    j["regions"] = c.regions;
    j["group"] = json::array();
    for (const auto& g : c.group) j["group"].push_back(to_json(g));
    j["gamma_sweep"] = c.gamma_sweep;
    const Tolerances& t = c.tolerances;
    j["tolerances"] = {{"normalize", t.normalize},   {"invariance", t.invariance}, {"covariance", t.covariance},
                       {"translation", t.translation}, {"kernel_pd", t.kernel_pd}, {"logic", t.logic},
                       {"oracle", t.oracle}};
    j["backend"] = c.backend;
    j["fast_tolerance"] = c.fast_tolerance;
    j["seed"] = c.seed;
    j["output"] = c.output;
    const LocalizationOptions& o = c.localization;
    j["localization"] = {{"oversample", o.oversample},
                         {"window_nodes", o.window_nodes},
                         {"refine", o.refine},
                         {"pad", o.pad},
                         {"max_local_nodes", o.max_local_nodes},
                         {"subsamples", o.subsamples},
                         {"centroid_correction", o.centroid_correction},
                         {"chebyshev_tolerance", o.chebyshev_tolerance},
                         {"tail_budget", o.tail_budget}};
    j["kernel_pd"] = {{"points", c.kernel_pd_points}, {"radius", c.kernel_pd_radius}};
    const LogicConfig& l = c.logic;
    j["logic"] = {{"t0", l.t0},           {"center", arr(l.center)},          {"radius", l.radius},
                  {"samples", l.samples}, {"rcl_samples", l.rcl_samples}, {"cone_gammas", l.cone_gammas}};
    j["field_dump"] = {{"times", c.dump_times}, {"points", c.dump_points}};
    return j;
}

std::uint64_t config_hash(const ExperimentConfig& c) {
    std::uint64_t h = 1469598103934665603ull;
    json j = to_json(c);
    j.erase("output");  // where results go does not change them
    for (unsigned char ch : j.dump()) h = (h ^ ch) * 1099511628211ull;
    return h;
}

std::string hex(std::uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string s(16, '0');
    for (int i = 15; i >= 0; --i, v >>= 4) s[i] = digits[v & 15];
    return s;
}

WavePacket build_packet(const ExperimentConfig& c, const GridConfig& grid) {
    const MomentumGrid mg(grid.N, grid.P);
    if (!c.packet.file.empty()) {
        std::filesystem::path p = c.packet.file;
        if (p.is_relative()) p = c.base_dir / p;
        WavePacket phi = load_packet(p);
        if (!(phi.grid() == mg) || phi.mass() != c.mass)
            throw Error(ErrorKind::config, "packet file grid or mass differs from the config");
        return phi;
    }
    if (c.packet.zero) return WavePacket(mg, c.mass, std::vector<cplx>(mg.size()));
    return make_packet(mg, c.mass, c.packet.params);
}

WavePacket build_packet(const ExperimentConfig& c) { return build_packet(c, c.grid); }

KernelSpec build_kernel(const ExperimentConfig& c) { return parse_kernel(c.kernel, c.mass); }

}  // namespace achronal
