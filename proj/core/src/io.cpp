#include "trapwalk/io.hpp"

#include <bit>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace trapwalk {

namespace {

using ordered_json = nlohmann::ordered_json;

void put_bytes(std::ostream& out, const void* data, std::size_t size) {
    out.write(static_cast<const char*>(data), std::streamsize(size));
}

void put_u8(std::ostream& out, std::uint8_t v) { put_bytes(out, &v, 1); }

void put_u16(std::ostream& out, std::uint16_t v) {
    const std::uint8_t b[2] = {std::uint8_t(v), std::uint8_t(v >> 8)};
    put_bytes(out, b, 2);
}

void put_u32(std::ostream& out, std::uint32_t v) {
    std::uint8_t b[4];
    for (int i = 0; i < 4; ++i) b[i] = std::uint8_t(v >> (8 * i));
    put_bytes(out, b, 4);
}

void put_u64(std::ostream& out, std::uint64_t v) {
    std::uint8_t b[8];
    for (int i = 0; i < 8; ++i) b[i] = std::uint8_t(v >> (8 * i));
    put_bytes(out, b, 8);
}

void put_i32(std::ostream& out, std::int32_t v) { put_u32(out, std::uint32_t(v)); }
void put_f64(std::ostream& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

void get_bytes(std::istream& in, void* data, std::size_t size, const char* what) {
    in.read(static_cast<char*>(data), std::streamsize(size));
    if (std::size_t(in.gcount()) != size)
        throw FormatError(FormatError::Kind::Truncated, std::string("truncated ") + what);
}

std::uint8_t get_u8(std::istream& in, const char* what) {
    std::uint8_t v;
    get_bytes(in, &v, 1, what);
    return v;
}

std::uint16_t get_u16(std::istream& in, const char* what) {
    std::uint8_t b[2];
    get_bytes(in, b, 2, what);
    return std::uint16_t(b[0] | (std::uint16_t(b[1]) << 8));
}

std::uint32_t get_u32(std::istream& in, const char* what) {
    std::uint8_t b[4];
    get_bytes(in, b, 4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t(b[i]) << (8 * i);
    return v;
}

std::uint64_t get_u64(std::istream& in, const char* what) {
    std::uint8_t b[8];
    get_bytes(in, b, 8, what);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t(b[i]) << (8 * i);
    return v;
}

std::int32_t get_i32(std::istream& in, const char* what) {
    return std::int32_t(get_u32(in, what));
}

double get_f64(std::istream& in, const char* what) {
    return std::bit_cast<double>(get_u64(in, what));
}

void expect_eof(std::istream& in) {
    char c;
    in.read(&c, 1);
    if (in.gcount() != 0)
        throw FormatError(FormatError::Kind::Malformed, "trailing bytes after payload");
}

std::ofstream open_out(const std::filesystem::path& file) {
    std::ofstream out(file, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open for writing: " + file.string());
    return out;
}

std::ifstream open_in(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw Error("cannot open for reading: " + file.string());
    return in;
}

ordered_json site_to_json(int d, Site s) {
    ordered_json a = ordered_json::array();
    for (int i = 0; i < d; ++i) a.push_back(s.c[i]);
    return a;
}

Site site_from_json(const ordered_json& a) {
    if (!a.is_array() || a.size() < 1 || a.size() > kMaxDim)
        throw FormatError(FormatError::Kind::Malformed, "bad site coordinates");
    Site s;
    for (std::size_t i = 0; i < a.size(); ++i) s.c[i] = a[i].get<std::int32_t>();
    return s;
}

ordered_json siteset_to_json(const SiteSet& set) {
    ordered_json a = ordered_json::array();
    for (const Site& s : set) a.push_back(site_to_json(set.dim(), s));
    return a;
}

SiteSet siteset_from_json(int d, const ordered_json& a) {
    std::vector<Site> sites;
    for (const auto& e : a) sites.push_back(site_from_json(e));
    return SiteSet::of(d, std::move(sites));
}

}  // namespace

std::uint32_t crc32(const void* data, std::size_t size, std::uint32_t seed) {
    static const auto table = [] {
        std::array<std::uint32_t, 256> t{};
        for (std::uint32_t i = 0; i < 256; ++i) {
            std::uint32_t c = i;
            for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
            t[i] = c;
        }
        return t;
    }();
    std::uint32_t crc = seed ^ 0xFFFFFFFFu;
    const auto* p = static_cast<const std::uint8_t*>(data);
    for (std::size_t i = 0; i < size; ++i) crc = table[(crc ^ p[i]) & 0xFF] ^ (crc >> 8);
    return crc ^ 0xFFFFFFFFu;
}

void write_environment(const Environment& env, std::ostream& out) {
    const BoxSpec& box = env.box();
    if (!(box.origin == Site()))
        throw DomainError("the environment container stores origin-centered boxes only");
    put_bytes(out, "TWK1", 4);
    put_u16(out, 1);
    put_u8(out, std::uint8_t(box.d));
    for (int a = 0; a < box.d; ++a) put_i32(out, box.half_width);
    put_f64(out, env.p());
    put_u64(out, env.seed());
    put_u8(out, std::uint8_t(env.boundary_rule()));
    const std::int64_t n = box.volume();
    std::vector<std::uint8_t> bytes(static_cast<std::size_t>((n + 7) / 8), 0);
    for (std::int64_t i = 0; i < n; ++i)
        if (env.is_open_index(i))
            bytes[static_cast<std::size_t>(i >> 3)] |= std::uint8_t(1u << (i & 7));
    put_bytes(out, bytes.data(), bytes.size());
}

Environment read_environment(std::istream& in) {
    char magic[4];
    get_bytes(in, magic, 4, "magic");
    if (std::string(magic, 4) != "TWK1")
        throw FormatError(FormatError::Kind::BadMagic, "not an environment container");
    const std::uint16_t version = get_u16(in, "version");
    if (version != 1)
        throw FormatError(FormatError::Kind::Version,
                          "unsupported container version " + std::to_string(version));
    const int d = get_u8(in, "dimension");
    if (d < 1 || d > kMaxDim)
        throw FormatError(FormatError::Kind::Malformed, "dimension outside 1..3");
    BoxSpec box;
    box.d = d;
    for (int a = 0; a < d; ++a) {
        const std::int32_t hw = get_i32(in, "half width");
        if (hw < 0) throw FormatError(FormatError::Kind::Malformed, "negative half width");
        if (a == 0)
            box.half_width = hw;
        else if (hw != box.half_width)
            throw FormatError(FormatError::Kind::Malformed,
                              "anisotropic boxes are not representable");
    }
    const double p = get_f64(in, "probability");
    if (!(p >= 0.0 && p <= 1.0))
        throw FormatError(FormatError::Kind::Malformed, "probability outside [0,1]");
    const std::uint64_t seed = get_u64(in, "seed");
    const std::uint8_t rule = get_u8(in, "boundary rule");
    if (rule != std::uint8_t(BoundaryRule::Absorbing))
        throw FormatError(FormatError::Kind::Malformed, "unknown boundary rule");

    const std::int64_t n = box.volume();
    std::vector<std::uint8_t> bytes(static_cast<std::size_t>((n + 7) / 8), 0);
    get_bytes(in, bytes.data(), bytes.size(), "site mask");
    expect_eof(in);
    std::vector<std::uint8_t> mask(static_cast<std::size_t>(n), 0);
    for (std::int64_t i = 0; i < n; ++i)
        mask[static_cast<std::size_t>(i)] =
            (bytes[static_cast<std::size_t>(i >> 3)] >> (i & 7)) & 1;
    return Environment::from_mask(box, mask, p, seed);
}

void save_environment(const Environment& env, const std::filesystem::path& file) {
    auto out = open_out(file);
    write_environment(env, out);
    if (!out) throw Error("write failed: " + file.string());
}

Environment load_environment(const std::filesystem::path& file) {
    auto in = open_in(file);
    return read_environment(in);
}

void save_field_level(const ScalarField& field, const std::filesystem::path& file) {
    field.box.validate();
    if (std::int64_t(field.values.size()) != field.box.volume())
        throw DomainError("field value count does not match box volume");
    std::string payload;
    payload.reserve(field.values.size() * 8);
    {
        std::ostringstream buf(std::ios::binary);
        for (double v : field.values) put_f64(buf, v);
        payload = buf.str();
    }
    {
        auto out = open_out(file);
        put_bytes(out, payload.data(), payload.size());
        if (!out) throw Error("write failed: " + file.string());
    }
    ordered_json meta;
    meta["format"] = "twk-field";
    meta["version"] = 1;
    meta["d"] = field.box.d;
    meta["half_width"] = field.box.half_width;
    meta["origin"] = site_to_json(field.box.d, field.box.origin);
    meta["count"] = field.box.volume();
    meta["log_domain"] = field.log_domain;
    meta["crc32"] = crc32(payload.data(), payload.size());
    std::filesystem::path side = file;
    side += ".json";
    auto out = open_out(side);
    const std::string text = meta.dump(2);
    put_bytes(out, text.data(), text.size());
    put_u8(out, '\n');
    if (!out) throw Error("write failed: " + side.string());
}

ScalarField load_field_level(const std::filesystem::path& file) {
    std::filesystem::path side = file;
    side += ".json";
    ordered_json meta;
    {
        auto in = open_in(side);
        try {
            in >> meta;
        } catch (const std::exception& e) {
            throw FormatError(FormatError::Kind::Malformed,
                              std::string("bad field sidecar: ") + e.what());
        }
    }
    ScalarField out;
    try {
        if (meta.at("format").get<std::string>() != "twk-field")
            throw FormatError(FormatError::Kind::BadMagic, "not a field sidecar");
        const int version = meta.at("version").get<int>();
        if (version != 1)
            throw FormatError(FormatError::Kind::Version,
                              "unsupported field version " + std::to_string(version));
        out.box.d = meta.at("d").get<int>();
        out.box.half_width = meta.at("half_width").get<std::int32_t>();
        out.box.origin = site_from_json(meta.at("origin"));
        out.log_domain = meta.at("log_domain").get<bool>();
    } catch (const FormatError&) {
        throw;
    } catch (const std::exception& e) {
        throw FormatError(FormatError::Kind::Malformed,
                          std::string("bad field sidecar: ") + e.what());
    }
    out.box.validate();
    if (meta.at("count").get<std::int64_t>() != out.box.volume())
        throw FormatError(FormatError::Kind::Malformed, "field count does not match box");

    auto in = open_in(file);
    std::string payload((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (std::int64_t(payload.size()) != out.box.volume() * 8)
        throw FormatError(FormatError::Kind::Truncated, "field payload size mismatch");
    if (crc32(payload.data(), payload.size()) != meta.at("crc32").get<std::uint32_t>())
        throw FormatError(FormatError::Kind::Checksum, "field payload checksum mismatch");
    std::istringstream buf(payload, std::ios::binary);
    out.values.resize(static_cast<std::size_t>(out.box.volume()));
    for (double& v : out.values) v = get_f64(buf, "field value");
    return out;
}

void save_site_set(const SiteSet& set, const std::filesystem::path& file) {
    if (set.dim() < 1 || set.dim() > kMaxDim)
        throw DomainError("site set dimension must be 1, 2 or 3");
    std::ostringstream body(std::ios::binary);
    put_u16(body, 1);
    put_u8(body, std::uint8_t(set.dim()));
    put_u64(body, std::uint64_t(set.size()));
    for (const Site& s : set)
        for (int a = 0; a < set.dim(); ++a) put_i32(body, s.c[a]);
    const std::string text = body.str();

    auto out = open_out(file);
    put_bytes(out, "TWKS", 4);
    put_bytes(out, text.data(), text.size());
    put_u32(out, crc32(text.data(), text.size()));
    if (!out) throw Error("write failed: " + file.string());
}

SiteSet load_site_set(const std::filesystem::path& file) {
    auto in = open_in(file);
    char magic[4];
    get_bytes(in, magic, 4, "magic");
    if (std::string(magic, 4) != "TWKS")
        throw FormatError(FormatError::Kind::BadMagic, "not a site-set container");
    std::string body((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (body.size() < 4)
        throw FormatError(FormatError::Kind::Truncated, "site-set container too short");
    const std::string payload = body.substr(0, body.size() - 4);
    std::istringstream tail(body.substr(body.size() - 4), std::ios::binary);
    const std::uint32_t want = get_u32(tail, "checksum");
    if (crc32(payload.data(), payload.size()) != want)
        throw FormatError(FormatError::Kind::Checksum, "site-set checksum mismatch");

    std::istringstream buf(payload, std::ios::binary);
    const std::uint16_t version = get_u16(buf, "version");
    if (version != 1)
        throw FormatError(FormatError::Kind::Version,
                          "unsupported site-set version " + std::to_string(version));
    const int d = get_u8(buf, "dimension");
    if (d < 1 || d > kMaxDim)
        throw FormatError(FormatError::Kind::Malformed, "dimension outside 1..3");
    const std::uint64_t count = get_u64(buf, "count");
    if (count > (payload.size() - 11) / (4 * std::size_t(d)))
        throw FormatError(FormatError::Kind::Truncated, "site-set count exceeds payload");
    std::vector<Site> sites;
    sites.reserve(count);
    for (std::uint64_t i = 0; i < count; ++i) {
        Site s;
        for (int a = 0; a < d; ++a) s.c[a] = get_i32(buf, "coordinate");
        sites.push_back(s);
    }
    expect_eof(buf);
    return SiteSet::of(d, std::move(sites));
}

namespace {

ordered_json params_to_json(const ScaleParams& p) {
    ordered_json j;
    j["d"] = p.d;
    j["n"] = p.n;
    j["k_n"] = p.k_n;
    j["R"] = p.R;
    j["alpha1"] = p.alpha1;
    j["alpha2"] = p.alpha2;
    j["c2"] = p.c2;
    j["iota"] = p.iota;
    j["chi"] = p.chi;
    return j;
}

ScaleParams params_from_json(const ordered_json& j) {
    ScaleParams p;
    p.d = j.at("d").get<int>();
    p.n = j.at("n").get<std::int64_t>();
    p.k_n = j.at("k_n").get<std::int64_t>();
    p.R = j.at("R").get<double>();
    p.alpha1 = j.at("alpha1").get<double>();
    p.alpha2 = j.at("alpha2").get<double>();
    p.c2 = j.at("c2").get<double>();
    p.iota = j.at("iota").get<double>();
    p.chi = j.at("chi").get<double>();
    return p;
}

}  // namespace

void save_hierarchy(const IslandHierarchy& hier, const std::filesystem::path& file) {
    const BoxSpec& box = hier.lambda.box;
    ordered_json j;
    j["format"] = "twk-hierarchy";
    j["version"] = 1;
    j["params"] = params_to_json(hier.params);
    ordered_json q;
    q["p0"] = hier.quantiles.p0;
    q["c2"] = hier.quantiles.c2;
    q["log_n"] = hier.quantiles.log_n;
    q["target_fraction"] = hier.quantiles.target_fraction;
    q["sample_count"] = hier.quantiles.sample_count;
    q["order_index"] = hier.quantiles.order_index;
    q["envs_used"] = hier.quantiles.envs_used;
    q["low_resolution"] = hier.quantiles.low_resolution;
    j["quantiles"] = q;
    ordered_json b;
    b["d"] = box.d;
    b["half_width"] = box.half_width;
    b["origin"] = site_to_json(box.d, box.origin);
    j["box"] = b;
    ordered_json u = ordered_json::array();
    for (const auto& [alpha, set] : hier.U) {
        ordered_json e;
        e["alpha"] = alpha;
        e["sites"] = siteset_to_json(set);
        u.push_back(e);
    }
    j["U"] = u;
    j["dstar_threshold"] = hier.dstar_threshold;
    j["dstar"] = siteset_to_json(hier.dstar);
    j["lambda_values"] = hier.lambda.values;
    j["lambda_log_domain"] = hier.lambda.log_domain;
    j["lambda_evaluated"] = hier.lambda_evaluated;
    j["lambda_complete"] = hier.lambda_complete;
    ordered_json sel;
    ordered_json vlist = ordered_json::array();  // selection order is lambda-descending, keep it
    for (const Site& v : hier.selection.V) vlist.push_back(site_to_json(box.d, v));
    sel["V"] = vlist;
    sel["dn"] = siteset_to_json(hier.selection.dn);
    sel["dn_radius"] = hier.selection.dn_radius;
    sel["separation_radius"] = hier.selection.separation_radius;
    ordered_json sv = ordered_json::array();
    for (const auto& [a, bb] : hier.selection.separation_violations) {
        ordered_json pr = ordered_json::array();
        pr.push_back(site_to_json(box.d, a));
        pr.push_back(site_to_json(box.d, bb));
        sv.push_back(pr);
    }
    sel["separation_violations"] = sv;
    ordered_json lmv = ordered_json::array();
    for (const Site& v : hier.selection.localmax_violations)
        lmv.push_back(site_to_json(box.d, v));
    sel["localmax_violations"] = lmv;
    j["selection"] = sel;

    auto out = open_out(file);
    const std::string text = j.dump(2);
    put_bytes(out, text.data(), text.size());
    put_u8(out, '\n');
    if (!out) throw Error("write failed: " + file.string());
}

IslandHierarchy load_hierarchy(const std::filesystem::path& file) {
    ordered_json j;
    {
        auto in = open_in(file);
        try {
            in >> j;
        } catch (const std::exception& e) {
            throw FormatError(FormatError::Kind::Malformed,
                              std::string("bad hierarchy file: ") + e.what());
        }
    }
    IslandHierarchy h;
    try {
        if (j.at("format").get<std::string>() != "twk-hierarchy")
            throw FormatError(FormatError::Kind::BadMagic, "not a hierarchy file");
        if (j.at("version").get<int>() != 1)
            throw FormatError(FormatError::Kind::Version, "unsupported hierarchy version");
        h.params = params_from_json(j.at("params"));
        const auto& q = j.at("quantiles");
        h.quantiles.p0 = q.at("p0").get<double>();
        h.quantiles.c2 = q.at("c2").get<double>();
        h.quantiles.log_n = q.at("log_n").get<double>();
        h.quantiles.target_fraction = q.at("target_fraction").get<double>();
        h.quantiles.sample_count = q.at("sample_count").get<std::int64_t>();
        h.quantiles.order_index = q.at("order_index").get<std::int64_t>();
        h.quantiles.envs_used = q.at("envs_used").get<std::int64_t>();
        h.quantiles.low_resolution = q.at("low_resolution").get<bool>();
        const auto& b = j.at("box");
        BoxSpec box;
        box.d = b.at("d").get<int>();
        box.half_width = b.at("half_width").get<std::int32_t>();
        box.origin = site_from_json(b.at("origin"));
        box.validate();
        for (const auto& e : j.at("U"))
            h.U[e.at("alpha").get<double>()] = siteset_from_json(box.d, e.at("sites"));
        h.dstar_threshold = j.at("dstar_threshold").get<double>();
        h.dstar = siteset_from_json(box.d, j.at("dstar"));
        h.lambda.box = box;
        h.lambda.values = j.at("lambda_values").get<std::vector<double>>();
        h.lambda.log_domain = j.at("lambda_log_domain").get<bool>();
        h.lambda_evaluated = j.at("lambda_evaluated").get<std::vector<std::uint8_t>>();
        h.lambda_complete = j.at("lambda_complete").get<bool>();
        if (std::int64_t(h.lambda.values.size()) != box.volume() ||
            h.lambda_evaluated.size() != h.lambda.values.size())
            throw FormatError(FormatError::Kind::Malformed, "lambda payload size mismatch");
        const auto& sel = j.at("selection");
        for (const auto& e : sel.at("V")) h.selection.V.push_back(site_from_json(e));
        h.selection.dn = siteset_from_json(box.d, sel.at("dn"));
        h.selection.dn_radius = sel.at("dn_radius").get<double>();
        h.selection.separation_radius = sel.at("separation_radius").get<double>();
        for (const auto& e : sel.at("separation_violations"))
            h.selection.separation_violations.emplace_back(site_from_json(e.at(0)),
                                                           site_from_json(e.at(1)));
        for (const auto& e : sel.at("localmax_violations"))
            h.selection.localmax_violations.push_back(site_from_json(e));
    } catch (const FormatError&) {
        throw;
    } catch (const std::exception& e) {
        throw FormatError(FormatError::Kind::Malformed,
                          std::string("bad hierarchy file: ") + e.what());
    }
    return h;
}

}  // namespace trapwalk
