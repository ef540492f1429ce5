#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "trapwalk/errors.hpp"
#include "trapwalk/experiments.hpp"
#include "trapwalk/io.hpp"

using namespace trapwalk;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const std::string& stem) {
    return fs::temp_directory_path() / ("trapwalk_test_" + stem);
}

std::vector<char> slurp(const fs::path& file) {
    std::ifstream in(file, std::ios::binary);
    REQUIRE(in.good());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void spit(const fs::path& file, const std::vector<char>& bytes) {
    std::ofstream out(file, std::ios::binary | std::ios::trunc);
    out.write(bytes.data(), std::streamsize(bytes.size()));
}

void corrupt_byte(const fs::path& file, std::size_t offset, char xor_mask) {
    auto bytes = slurp(file);
    REQUIRE(offset < bytes.size());
    bytes[offset] = char(bytes[offset] ^ xor_mask);
    spit(file, bytes);
}

Site site2(std::int32_t x, std::int32_t y) {
    Site s{};
    s.c[0] = x;
    s.c[1] = y;
    return s;
}

struct Cleanup {
    std::vector<fs::path> files;
    ~Cleanup() {
        for (const auto& f : files) {
            std::error_code ec;
            fs::remove(f, ec);
        }
    }
    fs::path add(const fs::path& f) {
        files.push_back(f);
        return f;
    }
};

}  // namespace

TEST_CASE("environment container roundtrip") {
    Cleanup gc;
    for (int d : {1, 2, 3}) {
        BoxSpec b;
        b.d = d;
        b.half_width = d == 3 ? 4 : 9;
        const Environment env = Environment::generate(b, 0.65, 42 + std::uint64_t(d));
        const fs::path file = gc.add(temp_file("env_d" + std::to_string(d) + ".twk"));
        save_environment(env, file);
        const Environment back = load_environment(file);
        CHECK(back.box().d == d);
        CHECK(back.box().half_width == b.half_width);
        CHECK(back.open_count() == env.open_count());
        for (const Site& s : region(Site{}, double(b.half_width), Norm::Linf, d))
            CHECK(back.is_open(s) == env.is_open(s));

        // byte-for-byte deterministic writes
        const fs::path file2 = gc.add(temp_file("env_d" + std::to_string(d) + "_again.twk"));
        save_environment(env, file2);
        CHECK(slurp(file) == slurp(file2));
    }
}

TEST_CASE("environment container rejects damage") {
    Cleanup gc;
    BoxSpec b;
    b.d = 1;
    b.half_width = 4;
    const Environment env = Environment::generate(b, 0.5, 1);
    const fs::path file = gc.add(temp_file("env_damage.twk"));

    auto fresh = [&] { save_environment(env, file); };

    SUBCASE("bad magic") {
        fresh();
        corrupt_byte(file, 0, 0x7f);
        CHECK_THROWS_AS(load_environment(file), FormatError);
        try {
            load_environment(file);
        } catch (const FormatError& e) {
            CHECK(e.kind == FormatError::Kind::BadMagic);
        }
    }
    SUBCASE("unsupported version") {
        fresh();
        corrupt_byte(file, 4, 0x10);
        try {
            load_environment(file);
            FAIL("expected FormatError");
        } catch (const FormatError& e) {
            CHECK(e.kind == FormatError::Kind::Version);
        }
    }
    SUBCASE("bad dimension byte") {
        fresh();
        corrupt_byte(file, 6, 0x0c);
        try {
            load_environment(file);
            FAIL("expected FormatError");
        } catch (const FormatError& e) {
            CHECK(e.kind == FormatError::Kind::Malformed);
        }
    }
    SUBCASE("truncation") {
        fresh();
        auto bytes = slurp(file);
        bytes.resize(bytes.size() - 1);
        spit(file, bytes);
        try {
            load_environment(file);
            FAIL("expected FormatError");
        } catch (const FormatError& e) {
            CHECK(e.kind == FormatError::Kind::Truncated);
        }
    }
    SUBCASE("trailing garbage") {
        fresh();
        auto bytes = slurp(file);
        bytes.push_back('x');
        spit(file, bytes);
        try {
            load_environment(file);
            FAIL("expected FormatError");
        } catch (const FormatError& e) {
            CHECK(e.kind == FormatError::Kind::Malformed);
        }
    }
    SUBCASE("missing file") {
        CHECK_THROWS_AS(load_environment(temp_file("no_such_file.twk")), Error);
    }
    SUBCASE("shifted boxes are refused") {
        BoxSpec shifted = b;
        shifted.origin.c[0] = 3;
        const Environment off = Environment::all_open(shifted);
        CHECK_THROWS_AS(save_environment(off, file), DomainError);
    }
}

TEST_CASE("field level roundtrip") {
    Cleanup gc;
    BoxSpec b;
    b.d = 2;
    b.half_width = 3;
    ScalarField f;
    f.box = b;
    f.values.assign(std::size_t(b.volume()), 0.0);
    for (std::size_t i = 0; i < f.values.size(); ++i)
        f.values[i] = (double(i) + 0.25) / double(f.values.size());
    f.values[5] = 0.1 + 0.2;  // not exactly representable, must survive bit-exact

    SUBCASE("linear domain") {
        const fs::path file = gc.add(temp_file("field_lin.bin"));
        gc.add(fs::path(file.string() + ".json"));
        save_field_level(f, file);
        const ScalarField back = load_field_level(file);
        CHECK(back.box.d == 2);
        CHECK(back.box.half_width == 3);
        CHECK(!back.log_domain);
        REQUIRE(back.values.size() == f.values.size());
        for (std::size_t i = 0; i < f.values.size(); ++i) CHECK(back.values[i] == f.values[i]);
    }
    SUBCASE("log domain with -inf entries") {
        ScalarField lf = f;
        lf.log_domain = true;
        lf.values[0] = -std::numeric_limits<double>::infinity();
        lf.values[1] = -745.123456789;
        const fs::path file = gc.add(temp_file("field_log.bin"));
        gc.add(fs::path(file.string() + ".json"));
        save_field_level(lf, file);
        const ScalarField back = load_field_level(file);
        CHECK(back.log_domain);
        CHECK(back.values[0] == lf.values[0]);
        CHECK(back.values[1] == lf.values[1]);
    }
    SUBCASE("payload corruption is caught by the checksum") {
        const fs::path file = gc.add(temp_file("field_bad.bin"));
        gc.add(fs::path(file.string() + ".json"));
        save_field_level(f, file);
        corrupt_byte(file, 9, 0x01);
        try {
            load_field_level(file);
            FAIL("expected FormatError");
        } catch (const FormatError& e) {
            CHECK(e.kind == FormatError::Kind::Checksum);
        }
    }
    SUBCASE("payload truncation") {
        const fs::path file = gc.add(temp_file("field_short.bin"));
        gc.add(fs::path(file.string() + ".json"));
        save_field_level(f, file);
        auto bytes = slurp(file);
        bytes.resize(bytes.size() - 8);
        spit(file, bytes);
        try {
            load_field_level(file);
            FAIL("expected FormatError");
        } catch (const FormatError& e) {
            CHECK(e.kind == FormatError::Kind::Truncated);
        }
    }
    SUBCASE("mangled sidecar") {
        const fs::path file = gc.add(temp_file("field_side.bin"));
        const fs::path side = gc.add(fs::path(file.string() + ".json"));
        save_field_level(f, file);
        spit(side, {'n', 'o', 'p', 'e'});
        try {
            load_field_level(file);
            FAIL("expected FormatError");
        } catch (const FormatError& e) {
            CHECK(e.kind == FormatError::Kind::Malformed);
        }
    }
}

TEST_CASE("site set roundtrip") {
    Cleanup gc;
    SiteSet set(2);
    set.insert(site2(0, 0));
    set.insert(site2(-3, 7));
    set.insert(site2(12, -1));
    set.insert(site2(12, -1));  // duplicate insert is a no-op

    const fs::path file = gc.add(temp_file("sites.twks"));
    save_site_set(set, file);
    const SiteSet back = load_site_set(file);
    CHECK(back.size() == 3);
    CHECK(back.sites() == set.sites());

    SUBCASE("deterministic bytes") {
        const fs::path file2 = gc.add(temp_file("sites_again.twks"));
        save_site_set(set, file2);
        CHECK(slurp(file) == slurp(file2));
    }
    SUBCASE("coordinate corruption trips the checksum") {
        corrupt_byte(file, 16, 0x02);
        try {
            load_site_set(file);
            FAIL("expected FormatError");
        } catch (const FormatError& e) {
            CHECK(e.kind == FormatError::Kind::Checksum);
        }
    }
    SUBCASE("bad magic") {
        corrupt_byte(file, 1, 0x7f);
        try {
            load_site_set(file);
            FAIL("expected FormatError");
        } catch (const FormatError& e) {
            CHECK(e.kind == FormatError::Kind::BadMagic);
        }
    }
    SUBCASE("header truncation") {
        auto bytes = slurp(file);
        bytes.resize(6);
        spit(file, bytes);
        try {
            load_site_set(file);
            FAIL("expected FormatError");
        } catch (const FormatError& e) {
            CHECK(e.kind == FormatError::Kind::Truncated);
        }
    }
    SUBCASE("empty set roundtrip") {
        const fs::path efile = gc.add(temp_file("sites_empty.twks"));
        save_site_set(SiteSet(3), efile);
        const SiteSet eback = load_site_set(efile);
        CHECK(eback.empty());
    }
}

TEST_CASE("hierarchy roundtrip") {
    Cleanup gc;
    BoxSpec b;
    b.d = 2;
    b.half_width = 8;
    const Environment env = Environment::generate(b, 0.75, 2024);
    ScaleParams params;
    params.d = 2;
    params.n = 40;
    params.k_n = 3;
    params.R = 2;
    const HierarchyBuild hb = build_hierarchy(env, params);
    const IslandHierarchy& h = hb.hier;

    const fs::path file = gc.add(temp_file("hier.json"));
    save_hierarchy(h, file);
    const IslandHierarchy back = load_hierarchy(file);

    CHECK(back.params.n == h.params.n);
    CHECK(back.params.k_n == h.params.k_n);
    CHECK(back.params.R == h.params.R);
    CHECK(back.quantiles.p0 == h.quantiles.p0);  // bit-exact
    CHECK(back.quantiles.order_index == h.quantiles.order_index);
    CHECK(back.dstar_threshold == h.dstar_threshold);
    REQUIRE(back.U.size() == h.U.size());
    for (const auto& [alpha, set] : h.U) {
        REQUIRE(back.U.count(alpha) == 1);
        CHECK(back.U.at(alpha).sites() == set.sites());
    }
    CHECK(back.dstar.sites() == h.dstar.sites());
    CHECK(back.selection.V == h.selection.V);  // order preserved
    CHECK(back.selection.dn.sites() == h.selection.dn.sites());
    CHECK(back.selection.dn_radius == h.selection.dn_radius);
    CHECK(back.lambda_complete == h.lambda_complete);
    CHECK(back.lambda_evaluated == h.lambda_evaluated);
    REQUIRE(back.lambda.values.size() == h.lambda.values.size());
    for (std::size_t i = 0; i < h.lambda.values.size(); ++i)
        CHECK(back.lambda.values[i] == h.lambda.values[i]);

    SUBCASE("second save is byte-identical") {
        const fs::path file2 = gc.add(temp_file("hier_again.json"));
        save_hierarchy(back, file2);
        const fs::path file3 = gc.add(temp_file("hier_third.json"));
        save_hierarchy(h, file3);
        CHECK(slurp(file2) == slurp(file3));
    }
    SUBCASE("garbage is malformed") {
        const fs::path bad = gc.add(temp_file("hier_bad.json"));
        spit(bad, {'{', 'o', 'o', 'p', 's'});
        try {
            load_hierarchy(bad);
            FAIL("expected FormatError");
        } catch (const FormatError& e) {
            CHECK(e.kind == FormatError::Kind::Malformed);
        }
    }
    SUBCASE("wrong magic string") {
        const fs::path bad = gc.add(temp_file("hier_magic.json"));
        std::ofstream out(bad);
        out << "{\"format\": \"nope\", \"version\": 1}\n";
        out.close();
        try {
            load_hierarchy(bad);
            FAIL("expected FormatError");
        } catch (const FormatError& e) {
            CHECK(e.kind == FormatError::Kind::BadMagic);
        }
    }
}

TEST_CASE("crc32 reference values") {
    // standard CRC-32 (IEEE 802.3) check value
    const char* s = "123456789";
    CHECK(crc32(s, 9) == 0xCBF43926u);
    CHECK(crc32("", 0) == 0u);
}
