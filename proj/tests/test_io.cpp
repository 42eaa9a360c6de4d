#include <gtest/gtest.h>

#include <filesystem>

#include "rskernel/io.hpp"

using namespace rsk;

namespace {

std::string data(const std::string& name) { return std::string(RSK_DATA_DIR) + "/" + name; }

std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / ("rskernel_test_" + name)).string();
}

json eleven_a_eigenvalues() {
    return json{{"$schema", kNewformSchema},
                {"label", "11a"},
                {"level", 11},
                {"weight", 2},
                {"eigenvalues", {{"2", -2}, {"3", -1}, {"4", 2}, {"5", 1}, {"7", -2}}}};
}

}  // namespace

TEST(NewformIO, EigenvalueMapExtends) {
    // without a bound the table stops at the largest supplied label
    EXPECT_EQ(newform_from_json(eleven_a_eigenvalues()).bound(), 7);
    json j = eleven_a_eigenvalues();
    j["eigenvalues"]["11"] = 1;
    j["bound"] = 10;
    NewformRecord f = newform_from_json(j);
    EXPECT_EQ(f.bound(), 10);
    EXPECT_EQ(f.coeff(6), 2);
    EXPECT_EQ(f.coeff(8), 0);
    EXPECT_EQ(f.coeff(9), -2);
    EXPECT_EQ(f.coeff(10), -2);
    NewformRecord full = ingest_newform(data("11a.json"));
    for (i64 n = 1; n <= 10; ++n) EXPECT_EQ(f.coeff(n), full.coeff(n));
}

TEST(NewformIO, RationalStringsMustBeIntegral) {
    json j = eleven_a_eigenvalues();
    j["eigenvalues"]["2"] = "-4/2";
    EXPECT_EQ(newform_from_json(j).coeff(2), -2);
    j["eigenvalues"]["2"] = "-3/2";
    EXPECT_THROW(newform_from_json(j), SchemaError);
    j["eigenvalues"]["2"] = json::array({1, 0});
    EXPECT_THROW(newform_from_json(j), BackendUnsupported);
}

TEST(NewformIO, InconsistentEigenvalueRejected) {
    json j = eleven_a_eigenvalues();
    j["eigenvalues"]["4"] = 3;
    EXPECT_THROW(newform_from_json(j), SchemaError);
}

TEST(NewformIO, EmptyOrMissingDataRejected) {
    json j = eleven_a_eigenvalues();
    j["eigenvalues"] = json::object();
    EXPECT_THROW(newform_from_json(j), SchemaError);
    j.erase("eigenvalues");
    EXPECT_THROW(newform_from_json(j), SchemaError);
}

TEST(NewformIO, SchemaTagChecked) {
    json j = eleven_a_eigenvalues();
    j["$schema"] = "rskernel/newform/v0";
    EXPECT_THROW(newform_from_json(j), SchemaError);
    j.erase("$schema");
    EXPECT_THROW(newform_from_json(j), SchemaError);
    json k = eleven_a_eigenvalues();
    k["field"] = "Q(sqrt(5))";
    EXPECT_THROW(newform_from_json(k), BackendUnsupported);
}

TEST(NewformIO, EveryCoefficientMutationIsCaught) {
    json j = newform_to_json(ingest_newform(data("11a.json")));
    // the record is overdetermined: each a(n), n >= 2, is checked by some identity
    for (i64 n = 2; n <= 60; ++n) {
        json k = j;
        k["coefficients"][static_cast<std::size_t>(n - 1)] = k["coefficients"][static_cast<std::size_t>(n - 1)].get<i64>() + 1;
        EXPECT_THROW(newform_from_json(k), SchemaError) << "a(" << n << ")";
    }
}

TEST(NewformIO, RoundTrip) {
    NewformRecord f = ingest_newform(data("37a.json"));
    std::string path = temp_path("37a.json");
    write_json(newform_to_json(f), path);
    NewformRecord g = ingest_newform(path);
    EXPECT_EQ(f.a, g.a);
    EXPECT_EQ(f.level, g.level);
    EXPECT_EQ(f.curve, g.curve);
    std::filesystem::remove(path);
}

TEST(TableIO, IntegerPadicAndCyclotomicRoundTrip) {
    auto ti = CoeffTable<i64>::filled(30, 0, 2, 11);
    for (i64 n = 1; n <= 30; ++n) ti[n] = n * n - 40;
    auto back_i = table_from_json<i64>(table_to_json(ti));
    EXPECT_EQ(back_i.a, ti.a);
    EXPECT_EQ(back_i.level, 11);

    auto tp = CoeffTable<Padic>::filled(30, Padic::zero(23, 20), 2, 11 * 7 * 23);
    for (i64 n = 1; n <= 30; ++n) tp[n] = Padic::from_rational(23, n, 23 * (n % 3 + 1), 20);
    std::string path = temp_path("table.json");
    export_table(tp, path);
    auto back_p = import_table<Padic>(path);
    for (i64 n = 1; n <= 30; ++n) {
        EXPECT_EQ(back_p[n], tp[n]);
        EXPECT_EQ(back_p[n].precision(), tp[n].precision());
    }
    std::filesystem::remove(path);

    auto tc = CoeffTable<CycloValue>::filled(10, CycloValue(0, 22));
    for (i64 n = 1; n <= 10; ++n) tc[n] = CycloValue::zeta(22, n, n - 5);
    auto back_c = table_from_json<CycloValue>(table_to_json(tc));
    for (i64 n = 1; n <= 10; ++n) EXPECT_EQ(back_c[n], tc[n]);
}

TEST(TableIO, SerializationIsDeterministic) {
    auto t = CoeffTable<i64>::filled(200, 0);
    for (i64 n = 1; n <= 200; ++n) t[n] = n % 7;
    EXPECT_EQ(table_to_json(t).dump(), table_to_json(table_from_json<i64>(table_to_json(t))).dump());
}

TEST(TableIO, WrongRingOrCountRejected) {
    auto t = CoeffTable<i64>::filled(5, 0);
    json j = table_to_json(t);
    EXPECT_THROW(table_from_json<Padic>(j), SchemaError);
    j["bound"] = 6;
    EXPECT_THROW(table_from_json<i64>(j), SchemaError);
}

TEST(ConfigIO, RoundTripAndDiagnostics) {
    RunConfig c = config_from_json(read_json(std::string(RSK_DATA_DIR) + "/../tests/data/config_q7_n11.json"));
    EXPECT_EQ(c.D, 7);
    EXPECT_EQ(c.N, 11);
    EXPECT_EQ(c.p, 23);
    EXPECT_EQ(c.mode, CharacterMode::Anticyclotomic);
    EXPECT_TRUE(c.diagnostics().empty());
    RunConfig d = config_from_json(config_to_json(c));
    EXPECT_EQ(config_to_json(d), config_to_json(c));
    EXPECT_EQ(selected_characters(c, c.params().cm).size(), 22u);

    RunConfig bad = config_from_json(read_json(std::string(RSK_DATA_DIR) + "/../tests/data/bad_config.json"));
    auto diag = bad.diagnostics();
    ASSERT_FALSE(diag.empty());
    bool coprime = false;
    for (auto& s : diag) coprime = coprime || s.find("coprimality") != std::string::npos;
    EXPECT_TRUE(coprime);

    RunConfig inert = c;
    inert.p = 3;
    ASSERT_EQ(inert.diagnostics().size(), 1u);
    EXPECT_EQ(inert.diagnostics()[0], "p must split in E");
}

TEST(ConfigIO, MissingFileAndBadJson) {
    EXPECT_THROW(read_json(temp_path("does_not_exist.json")), std::runtime_error);
    std::string path = temp_path("broken.json");
    {
        std::ofstream out(path);
        out << "{\"$schema\": ";
    }
    EXPECT_THROW(read_json(path), SchemaError);
    std::filesystem::remove(path);
}
