#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "embaug/common.hpp"
#include "embaug/config.hpp"

#include "testutil.hpp"

#include <fstream>
#include <string>

using namespace embaug;

TEST_CASE("sections, comments, and typed getters") {
    const std::string text =
        "# top comment\n"
        "\n"
        "[dataset]\n"
        "d = 64\n"
        "sigma = 0.25\n"
        "; another comment style\n"
        "  name =  spaced value \n"
        "\n"
        "[gan]\n"
        "conditional_disc = true\n"
        "epochs=50\n";
    ConfigFile cfg = ConfigFile::parse(text);

    CHECK(cfg.sections().size() == 2);
    CHECK(cfg.has("dataset", "d"));
    CHECK_FALSE(cfg.has("dataset", "missing"));
    CHECK_FALSE(cfg.has("missing", "d"));

    CHECK(cfg.get_u64("dataset", "d", 0) == 64);
    CHECK(cfg.get_double("dataset", "sigma", 0.0) == doctest::Approx(0.25));
    CHECK(cfg.raw("dataset", "name") == "spaced value");
    CHECK(cfg.get_bool("gan", "conditional_disc", false));
    CHECK(cfg.get_u64("gan", "epochs", 0) == 50);

    // Absent keys fall back.
    CHECK(cfg.get_u64("dataset", "n_bags", 155) == 155);
    CHECK(cfg.get_double("gan", "lr_g", 1e-4) == doctest::Approx(1e-4));
    CHECK(cfg.get_bool("gan", "other", false) == false);
    CHECK(cfg.get_string("dataset", "nope", "dflt") == "dflt");
    CHECK_THROWS_AS((void)cfg.raw("dataset", "nope"), ContractError);
}

TEST_CASE("boolean spellings") {
    ConfigFile cfg = ConfigFile::parse("[s]\na = 1\nb = 0\nc = true\nd = false\n");
    CHECK(cfg.get_bool("s", "a", false));
    CHECK_FALSE(cfg.get_bool("s", "b", true));
    CHECK(cfg.get_bool("s", "c", false));
    CHECK_FALSE(cfg.get_bool("s", "d", true));
}

TEST_CASE("parse errors carry 1-based line numbers") {
    auto check_fails = [](const std::string& text, std::size_t line, const char* needle) {
        try {
            (void)ConfigFile::parse(text);
            FAIL_CHECK("expected a parse error for: " << text);
        } catch (const ParseError& e) {
            CHECK(e.offset() == line);
            CHECK(std::string(e.what()).find(needle) != std::string::npos);
        }
    };
    check_fails("[s\n", 1, "missing ']'");
    check_fails("[ ]\n", 1, "empty section name");
    check_fails("[s]\n[t]\n[s]\n", 3, "duplicate section [s]");
    check_fails("k = v\n", 1, "before any [section]");
    check_fails("[s]\njust words\n", 2, "expected key = value");
    check_fails("[s]\n = v\n", 2, "empty key");
    check_fails("[s]\nk = 1\nk = 2\n", 3, "duplicate key \"k\" in [s]");
}

TEST_CASE("typed value errors name the section and key") {
    ConfigFile cfg = ConfigFile::parse("[s]\nu = abc\nf = 1.2.3\nb = maybe\nneg = -3\n");
    CHECK_THROWS_WITH_AS((void)cfg.get_u64("s", "u", 0),
                         doctest::Contains("[s] u: expected an unsigned integer"), ContractError);
    CHECK_THROWS_WITH_AS((void)cfg.get_double("s", "f", 0.0),
                         doctest::Contains("[s] f: expected a number"), ContractError);
    CHECK_THROWS_WITH_AS((void)cfg.get_bool("s", "b", false),
                         doctest::Contains("[s] b: expected true/false/1/0"), ContractError);
    CHECK_THROWS_AS((void)cfg.get_u64("s", "neg", 0), ContractError);
}

TEST_CASE("schema validation polices spelling and value syntax") {
    const ConfigSchema schema = {
        {"dataset", {{"d", ConfigKind::U64}, {"sigma", ConfigKind::F64}}},
        {"gan", {{"variant", ConfigKind::String}, {"conditional_disc", ConfigKind::Bool}}},
    };

    CHECK_NOTHROW(validate_config(
        ConfigFile::parse("[dataset]\nd = 8\nsigma = 0.1\n[gan]\nvariant = exp\n"), schema));
    // Empty config is fine: every key is optional.
    CHECK_NOTHROW(validate_config(ConfigFile::parse(""), schema));

    CHECK_THROWS_WITH_AS(validate_config(ConfigFile::parse("[typo]\nx = 1\n"), schema),
                         doctest::Contains("unknown section [typo]"), ContractError);
    CHECK_THROWS_WITH_AS(validate_config(ConfigFile::parse("[dataset]\ndd = 1\n"), schema),
                         doctest::Contains("unknown key \"dd\" in [dataset]"), ContractError);
    CHECK_THROWS_WITH_AS(
        validate_config(ConfigFile::parse("[dataset]\nd = not-a-number\n"), schema),
        doctest::Contains("expected an unsigned integer"), ContractError);
    CHECK_THROWS_WITH_AS(
        validate_config(ConfigFile::parse("[gan]\nconditional_disc = 2\n"), schema),
        doctest::Contains("expected true/false/1/0"), ContractError);
}

TEST_CASE("loading from disk") {
    auto dir = testutil::fresh_dir("config_load");
    auto path = dir / "run.cfg";
    {
        std::ofstream out(path);
        out << "[dataset]\nd = 32\n";
    }
    ConfigFile cfg = ConfigFile::load(path.string());
    CHECK(cfg.get_u64("dataset", "d", 0) == 32);

    CHECK_THROWS_WITH_AS((void)ConfigFile::load((dir / "absent.cfg").string()),
                         doctest::Contains("cannot open"), ContractError);
}
