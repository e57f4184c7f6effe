#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "embaug/mil.hpp"
#include "testutil.hpp"

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <vector>

using namespace embaug;
using testutil::fd_check;
using testutil::fresh_dir;
using testutil::random_tensor;

namespace {

bool same_values(const Tensor& a, const Tensor& b) {
    if (a.size() != b.size()) return false;
    auto av = a.values(), bv = b.values();
    return std::memcmp(av.data(), bv.data(), av.size() * sizeof(double)) == 0;
}

void zero_params(const std::vector<Tensor>& params) {
    for (const Tensor& p : params) {
        Tensor t = p;
        for (double& v : t.values()) v = 0.0;
    }
}

Dataset small_dataset(std::size_t d, std::size_t K, std::size_t n_bags, double sigma,
                      std::uint64_t seed) {
    GenConfig gc;
    gc.d = d;
    gc.K = K;
    gc.n_bags = n_bags;
    gc.sigma = sigma;
    gc.mean_bag_size = 20;
    gc.min_bag_size = 8;
    gc.max_bag_size = 40;
    return generate_dataset(gc, seed);
}

Tensor attention_of(const MilModel& m, const Tensor& instances) {
    Graph g(false);
    return g.value(attention_weights(g, m, g.constant(instances)));
}

double lrelu(double x) { return x >= 0 ? x : 0.2 * x; }

void patch_byte(const std::filesystem::path& p, std::uint64_t off, char value) {
    std::fstream f(p, std::ios::in | std::ios::out | std::ios::binary);
    REQUIRE(f.good());
    f.seekp(static_cast<std::streamoff>(off));
    f.put(value);
}

}  // namespace

TEST_CASE("attention weights form a distribution over the bag") {
    Rng rng(3);
    MilModel m = make_mil_model(6, 3, 8, rng);
    Tensor H = random_tensor({7, 6}, rng, -2, 2, false);

    Tensor a = attention_of(m, H);
    REQUIRE(a.rank() == 1);
    REQUIRE(a.dim(0) == 7);
    double total = 0.0;
    for (double x : a.values()) {
        CHECK(x > 0.0);
        total += x;
    }
    CHECK(std::abs(total - 1.0) < 1e-12);

    // A single instance takes all the attention, exactly.
    Tensor one = random_tensor({1, 6}, rng, -2, 2, false);
    Tensor a1 = attention_of(m, one);
    CHECK(a1.at(0) == 1.0);

    // An empty bag cannot even become an instance matrix.
    Bag empty_bag{0, 6, {}};
    CHECK_THROWS_AS((void)mil_probs(m, empty_bag), ContractError);
    Graph g(false);
    Tensor narrow = random_tensor({3, 5}, rng, -2, 2, false);
    CHECK_THROWS_AS((void)attention_weights(g, m, g.constant(narrow)), ShapeError);

    CHECK_THROWS_AS((void)make_mil_model(0, 3, 8, rng), ContractError);
    CHECK_THROWS_AS((void)make_mil_model(6, 1, 8, rng), ContractError);
}

TEST_CASE("identical instances share attention uniformly and pool to themselves") {
    Rng rng(7);
    MilModel m = make_mil_model(5, 2, 6, rng);
    std::vector<double> row{0.4, -1.2, 0.7, 0.1, -0.3};
    Tensor H({6, 5});
    for (std::size_t i = 0; i < 6; ++i) {
        std::copy(row.begin(), row.end(), H.values().begin() + i * 5);
    }

    Tensor a = attention_of(m, H);
    for (double x : a.values()) CHECK(x == doctest::Approx(1.0 / 6).epsilon(1e-13));

    Graph g(false);
    Var av = attention_weights(g, m, g.constant(H));
    Tensor pooled = g.value(g.weighted_sum_rows(av, g.constant(H)));
    for (std::size_t j = 0; j < 5; ++j) {
        CHECK(pooled.at(0, j) == doctest::Approx(row[j]).epsilon(1e-12));
    }
}

TEST_CASE("instance order cannot change attention or predictions, bit for bit") {
    Rng rng(11);
    MilModel m = make_mil_model(16, 4, 32, rng);
    // 37 instances: not a multiple of any SIMD panel width, so row-position
    // effects in the matrix kernels would surface here if there were any.
    Tensor H = random_tensor({37, 16}, rng, -2, 2, false);
    Tensor a = attention_of(m, H);
    std::vector<double> probs = mil_probs(m, H);

    std::vector<std::size_t> perm(37);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    Rng shuffler(99);
    for (int round = 0; round < 4; ++round) {
        if (round == 0) {
            std::reverse(perm.begin(), perm.end());
        } else {
            shuffler.shuffle(perm);
        }
        Tensor Hp({37, 16});
        for (std::size_t i = 0; i < 37; ++i) {
            std::copy_n(H.values().begin() + perm[i] * 16, 16, Hp.values().begin() + i * 16);
        }
        Tensor ap = attention_of(m, Hp);
        for (std::size_t i = 0; i < 37; ++i) CHECK(ap.at(i) == a.at(perm[i]));
        CHECK(mil_probs(m, Hp) == probs);
    }

    // No hidden randomness: evaluating the same matrix twice is bit-identical.
    CHECK(mil_probs(m, H) == probs);
}

TEST_CASE("pooled coordinates stay inside the instance envelope") {
    Rng rng(13);
    MilModel m = make_mil_model(8, 3, 16, rng);
    for (int trial = 0; trial < 20; ++trial) {
        std::size_t n = 1 + rng.index(30);
        Tensor H = random_tensor({n, 8}, rng, -3, 3, false);
        Graph g(false);
        Var a = attention_weights(g, m, g.constant(H));
        Tensor pooled = g.value(g.weighted_sum_rows(a, g.constant(H)));
        for (std::size_t j = 0; j < 8; ++j) {
            double lo = H.at(0, j), hi = H.at(0, j);
            for (std::size_t i = 1; i < n; ++i) {
                lo = std::min(lo, H.at(i, j));
                hi = std::max(hi, H.at(i, j));
            }
            CHECK(pooled.at(0, j) >= lo - 1e-12 * (1 + std::abs(lo)));
            CHECK(pooled.at(0, j) <= hi + 1e-12 * (1 + std::abs(hi)));
        }
    }
}

TEST_CASE("bag probabilities sum to one") {
    Rng rng(17);
    MilModel m = make_mil_model(10, 5, 12, rng);
    for (int trial = 0; trial < 10; ++trial) {
        Tensor H = random_tensor({1 + rng.index(50), 10}, rng, -2, 2, false);
        std::vector<double> p = mil_probs(m, H);
        REQUIRE(p.size() == 5);
        double total = 0.0;
        for (double x : p) {
            CHECK(x > 0.0);
            total += x;
        }
        CHECK(std::abs(total - 1.0) < 1e-12);
    }
}

TEST_CASE("probabilities match a scalar hand trace on a two-instance bag") {
    Rng rng(23);
    MilModel m = make_mil_model(2, 2, 2, rng);
    zero_params(m.parameters());

    // Attention gates.
    const double V[2][2] = {{0.3, -0.5}, {0.8, 0.2}};
    const double Vb[2] = {0.05, -0.1};
    const double U[2][2] = {{-0.4, 0.6}, {0.1, 0.9}};
    const double Ub[2] = {0.2, 0.0};
    const double w[2] = {1.1, -0.7};
    const double wb = 0.15;
    // Classifier: only the first two hidden units are active.
    const double W0[2][2] = {{0.5, -0.3}, {0.25, 0.45}};
    const double b0[2] = {0.02, -0.04};
    const double W1[2][2] = {{0.9, -0.6}, {-0.2, 0.7}};
    const double b1[2] = {0.1, -0.1};

    {
        std::vector<Tensor> p = m.parameters();  // V.W V.b U.W U.b w.W w.b cls...
        for (int i = 0; i < 2; ++i) {
            for (int j = 0; j < 2; ++j) {
                p[0].at(std::size_t(i), std::size_t(j)) = V[i][j];
                p[2].at(std::size_t(i), std::size_t(j)) = U[i][j];
                p[6].at(std::size_t(i), std::size_t(j)) = W0[i][j];
            }
            p[1].at(std::size_t(i)) = Vb[i];
            p[3].at(std::size_t(i)) = Ub[i];
            p[4].at(std::size_t(i), 0) = w[i];
            p[7].at(std::size_t(i)) = b0[i];
            p[9].at(std::size_t(i)) = b1[i];
            for (int c = 0; c < 2; ++c) p[8].at(std::size_t(i), std::size_t(c)) = W1[i][c];
        }
        p[5].at(0) = wb;
    }

    const double h[2][2] = {{0.6, -0.2}, {-0.9, 0.4}};
    Tensor H({2, 2}, {h[0][0], h[0][1], h[1][0], h[1][1]});

    // Plain-double re-derivation.
    double score[2];
    for (int i = 0; i < 2; ++i) {
        double s = wb;
        for (int k = 0; k < 2; ++k) {
            double t = std::tanh(h[i][0] * V[0][k] + h[i][1] * V[1][k] + Vb[k]);
            double sg = 1.0 / (1.0 + std::exp(-(h[i][0] * U[0][k] + h[i][1] * U[1][k] + Ub[k])));
            s += w[k] * t * sg;
        }
        score[i] = s;
    }
    double mx = std::max(score[0], score[1]);
    double e0 = std::exp(score[0] - mx), e1 = std::exp(score[1] - mx);
    double a0 = e0 / (e0 + e1), a1 = e1 / (e0 + e1);
    double pooled[2] = {a0 * h[0][0] + a1 * h[1][0], a0 * h[0][1] + a1 * h[1][1]};
    double logits[2];
    for (int c = 0; c < 2; ++c) {
        double acc = b1[c];
        for (int k = 0; k < 2; ++k) {
            acc += lrelu(pooled[0] * W0[0][k] + pooled[1] * W0[1][k] + b0[k]) * W1[k][c];
        }
        logits[c] = acc;
    }
    double lm = std::max(logits[0], logits[1]);
    double q0 = std::exp(logits[0] - lm), q1 = std::exp(logits[1] - lm);
    double ref[2] = {q0 / (q0 + q1), q1 / (q0 + q1)};

    std::vector<double> got = mil_probs(m, H);
    CHECK(got[0] == doctest::Approx(ref[0]).epsilon(1e-12));
    CHECK(got[1] == doctest::Approx(ref[1]).epsilon(1e-12));
}

TEST_CASE("classification gradients agree with finite differences") {
    Rng rng(31);
    MilModel m = make_mil_model(3, 3, 4, rng);
    Tensor H = random_tensor({5, 3}, rng, -1.5, 1.5, false);

    std::vector<Tensor> params = m.parameters();
    auto build = [&](Graph& g) {
        return g.cross_entropy_with_logits(mil_logits(g, m, g.constant(H)), 1);
    };
    auto fd = fd_check(params, build);
    CHECK(fd.max_rel_err < 1e-5);

    // The pooling op also propagates into the instance matrix and weights.
    Tensor weights = random_tensor({4}, rng, 0.1, 1.0, true);
    Tensor rows = random_tensor({4, 3}, rng, -2, 2, true);
    std::vector<Tensor> pool_params{weights, rows};
    auto pool_build = [&](Graph& g) {
        return g.sum(g.weighted_sum_rows(g.leaf(weights), g.leaf(rows)));
    };
    auto fd_pool = fd_check(pool_params, pool_build);
    CHECK(fd_pool.max_rel_err < 1e-7);
}

TEST_CASE("augmentation modes produce the right instance matrices") {
    Dataset ds = small_dataset(8, 3, 8, 0.2, 51);
    const Bag& bag = ds.bags[2];
    const std::size_t n = bag.n_instances(), d = ds.d;

    Rng rng(1);
    Tensor none = augmented_instances(bag, AugPolicy::none(), 2, rng);
    CHECK(std::equal(bag.data.begin(), bag.data.end(), none.values().begin()));

    Rng pre_rng(2);
    PrecomputedAugs augs = precompute_patch_augs(pre_rng, ds, 2);
    CHECK(augs.bags.size() == ds.bags.size());
    REQUIRE(augs.bags[2].size() == 2);

    Rng pick_rng(3);
    Tensor patched = augmented_instances(bag, AugPolicy::patches(augs), 2, pick_rng);
    std::size_t from_original = 0, from_variants = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double* row = patched.values().data() + i * d;
        bool is_orig = std::equal(row, row + d, bag.data.data() + i * d);
        bool is_v0 = std::equal(row, row + d, augs.bags[2][0].data() + i * d);
        bool is_v1 = std::equal(row, row + d, augs.bags[2][1].data() + i * d);
        CHECK((is_orig || is_v0 || is_v1));
        (is_orig ? from_original : from_variants) += 1;
    }
    // With a uniform 1-in-3 pick over a whole bag, both sources appear.
    CHECK(from_original > 0);
    CHECK(from_variants > 0);

    Rng gan_init(4);
    Generator gen = make_generator(GanVariant::Ind, d, gan_init);
    Rng z1(5), z2(5);
    Tensor online = augmented_instances(bag, AugPolicy::gan(gen), 2, z1);
    Tensor direct = sample_augmentations(gen, none, z2);
    CHECK(same_values(online, direct));

    Rng z3(6);
    Tensor untouched = augmented_instances(bag, AugPolicy::gan(gen, 0.0), 2, z3);
    CHECK(std::equal(bag.data.begin(), bag.data.end(), untouched.values().begin()));

    Rng bad_rng(7);
    Generator narrow = make_generator(GanVariant::Ind, d + 1, bad_rng);
    CHECK_THROWS_AS((void)augmented_instances(bag, AugPolicy::gan(narrow), 2, bad_rng),
                    ContractError);
    AugPolicy bad_p = AugPolicy::gan(gen, 1.5);
    CHECK_THROWS_AS((void)augmented_instances(bag, bad_p, 2, bad_rng), ContractError);
    AugPolicy no_pre{AugMode::PatchPrecomputed, nullptr, nullptr, 1.0};
    CHECK_THROWS_AS((void)augmented_instances(bag, no_pre, 2, bad_rng), ContractError);
    CHECK_THROWS_AS((void)precompute_patch_augs(bad_rng, ds, 0), ContractError);
}

TEST_CASE("training is deterministic and zero epochs keeps the initialization") {
    Dataset ds = small_dataset(8, 3, 12, 0.2, 61);
    std::vector<std::size_t> train{0, 1, 2, 3, 4, 5, 6, 7};
    std::vector<std::size_t> val{8, 9, 10, 11};

    MilTrainConfig cfg;
    cfg.d_att = 16;
    cfg.epochs = 3;
    cfg.lr = 1e-3;
    cfg.seed = 77;

    TrainedMil a = train_mil(ds, train, val, AugPolicy::none(), cfg);
    TrainedMil b = train_mil(ds, train, val, AugPolicy::none(), cfg);
    REQUIRE(a.log.epochs.size() == 3);
    CHECK(a.log.best_epoch == b.log.best_epoch);
    CHECK(a.log.best_val_nll == b.log.best_val_nll);
    for (std::size_t e = 0; e < 3; ++e) {
        CHECK(a.log.epochs[e].train_loss == b.log.epochs[e].train_loss);
        CHECK(a.log.epochs[e].val_nll == b.log.epochs[e].val_nll);
        CHECK(a.log.epochs[e].val_accuracy == b.log.epochs[e].val_accuracy);
    }
    auto ap = a.model.parameters(), bp = b.model.parameters();
    for (std::size_t i = 0; i < ap.size(); ++i) CHECK(same_values(ap[i], bp[i]));

    MilTrainConfig other = cfg;
    other.seed = 78;
    TrainedMil c = train_mil(ds, train, val, AugPolicy::none(), other);
    auto cp = c.model.parameters();
    bool differs = false;
    for (std::size_t i = 0; i < ap.size(); ++i) {
        if (!same_values(ap[i], cp[i])) differs = true;
    }
    CHECK(differs);

    MilTrainConfig zero = cfg;
    zero.epochs = 0;
    TrainedMil z = train_mil(ds, train, val, AugPolicy::none(), zero);
    CHECK(z.log.epochs.empty());
    Rng init_check = Rng(cfg.seed).derive("mil/init");
    MilModel fresh = make_mil_model(ds.d, ds.K, cfg.d_att, init_check);
    auto zp = z.model.parameters(), fp = fresh.parameters();
    for (std::size_t i = 0; i < zp.size(); ++i) CHECK(same_values(zp[i], fp[i]));

    CHECK_THROWS_AS((void)train_mil(ds, {}, val, AugPolicy::none(), cfg), ContractError);
    CHECK_THROWS_AS((void)train_mil(ds, train, {}, AugPolicy::none(), cfg), ContractError);
    std::vector<std::size_t> oob{99};
    CHECK_THROWS_AS((void)train_mil(ds, oob, val, AugPolicy::none(), cfg), ContractError);
}

TEST_CASE("gan mode with p_apply zero trains exactly like mode none") {
    Dataset ds = small_dataset(6, 2, 8, 0.25, 71);
    std::vector<std::size_t> train{0, 1, 2, 3, 4, 5};
    std::vector<std::size_t> val{6, 7};
    Rng gan_init(9);
    Generator gen = make_generator(GanVariant::Ind, ds.d, gan_init);

    MilTrainConfig cfg;
    cfg.d_att = 8;
    cfg.epochs = 2;
    cfg.lr = 1e-3;
    cfg.seed = 5;

    TrainedMil plain = train_mil(ds, train, val, AugPolicy::none(), cfg);
    TrainedMil shadow = train_mil(ds, train, val, AugPolicy::gan(gen, 0.0), cfg);
    auto pp = plain.model.parameters(), sp = shadow.model.parameters();
    for (std::size_t i = 0; i < pp.size(); ++i) CHECK(same_values(pp[i], sp[i]));
    for (std::size_t e = 0; e < 2; ++e) {
        CHECK(plain.log.epochs[e].train_loss == shadow.log.epochs[e].train_loss);
    }
}

TEST_CASE("the model can memorize ten bags") {
    Dataset ds = small_dataset(16, 3, 10, 0.3, 81);
    std::vector<std::size_t> all(10);
    std::iota(all.begin(), all.end(), std::size_t{0});

    MilTrainConfig cfg;
    cfg.epochs = 200;
    cfg.lr = 1e-3;
    cfg.seed = 4;
    TrainedMil t = train_mil(ds, all, all, AugPolicy::none(), cfg);
    EvalResult on_train = evaluate_mil(t.model, ds, all);
    CHECK(on_train.accuracy == 1.0);
    CHECK(on_train.n == 10);
}

TEST_CASE("training aborts on non-finite embeddings with coordinates") {
    Dataset ds = small_dataset(6, 2, 4, 0.2, 91);
    ds.bags[1].data[3] = std::numeric_limits<double>::quiet_NaN();
    std::vector<std::size_t> train{0, 1, 2};
    std::vector<std::size_t> val{3};
    MilTrainConfig cfg;
    cfg.d_att = 8;
    cfg.epochs = 1;
    try {
        (void)train_mil(ds, train, val, AugPolicy::none(), cfg);
        FAIL("expected NonFiniteError");
    } catch (const NonFiniteError& e) {
        std::string msg = e.what();
        CHECK(msg.find("epoch 0") != std::string::npos);
        CHECK(msg.find("bag 1") != std::string::npos);
    }
}

TEST_CASE("classifier checkpoints round-trip bit-exactly") {
    auto dir = fresh_dir("mil_ckpt");
    Rng rng(111);
    MilModel m = make_mil_model(6, 4, 12, rng);
    std::string path = (dir / "model.eam").string();
    MilTrainConfig cfg;
    MilTrainLog log;
    log.epochs.push_back({1.0, 0.9, 0.5});
    log.best_epoch = 0;
    log.best_val_nll = 0.9;
    save_mil(m, path, &cfg, &log);
    CHECK(std::filesystem::exists(path + ".meta.json"));

    MilModel back = load_mil(path);
    CHECK(back.d == 6);
    CHECK(back.d_att == 12);
    CHECK(back.K == 4);
    auto orig = m.parameters(), loaded = back.parameters();
    REQUIRE(orig.size() == loaded.size());
    for (std::size_t i = 0; i < orig.size(); ++i) CHECK(same_values(orig[i], loaded[i]));

    Tensor H = random_tensor({5, 6}, rng, -2, 2, false);
    CHECK(mil_probs(m, H) == mil_probs(back, H));

    std::string again = (dir / "model2.eam").string();
    save_mil(back, again);
    CHECK(testutil::slurp(path) == testutil::slurp(again));
}

TEST_CASE("corrupted classifier checkpoints fail with located parse errors") {
    auto dir = fresh_dir("mil_ckpt_bad");
    Rng rng(121);
    MilModel m = make_mil_model(3, 2, 4, rng);
    std::string good = (dir / "good.eam").string();
    save_mil(m, good);

    auto copy_to = [&](const char* name) {
        std::string p = (dir / name).string();
        std::filesystem::copy_file(good, p);
        return p;
    };

    std::string bad_magic = copy_to("bad_magic.eam");
    patch_byte(bad_magic, 0, 'X');
    try {
        (void)load_mil(bad_magic);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.offset() == 0);
        CHECK(std::string(e.what()).find("bad magic") != std::string::npos);
    }

    std::string bad_version = copy_to("bad_version.eam");
    patch_byte(bad_version, 4, 3);
    try {
        (void)load_mil(bad_version);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.offset() == 4);
        CHECK(std::string(e.what()).find("unsupported version 3") != std::string::npos);
    }

    std::string zero_d = copy_to("zero_d.eam");
    patch_byte(zero_d, 8, 0);
    try {
        (void)load_mil(zero_d);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.offset() == 8);
        CHECK(std::string(e.what()).find("embedding dimension") != std::string::npos);
    }

    std::string one_class = copy_to("one_class.eam");
    patch_byte(one_class, 16, 1);
    try {
        (void)load_mil(one_class);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.offset() == 16);
        CHECK(std::string(e.what()).find("class count") != std::string::npos);
    }

    std::string cut = copy_to("cut.eam");
    std::filesystem::resize_file(cut, 20 + 8 * 2 + 4);
    try {
        (void)load_mil(cut);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("truncated") != std::string::npos);
        CHECK(std::string(e.what()).find("attention V weights") != std::string::npos);
    }

    std::string trailing = copy_to("trailing.eam");
    {
        std::ofstream f(trailing, std::ios::binary | std::ios::app);
        f.put('\0');
    }
    CHECK_THROWS_AS((void)load_mil(trailing), ParseError);

    CHECK_THROWS_AS((void)load_mil((dir / "missing.eam").string()), ContractError);
}
