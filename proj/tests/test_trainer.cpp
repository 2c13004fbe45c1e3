#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "smpriv/checkpoint.hpp"
#include "smpriv/errors.hpp"
#include "smpriv/trainer.hpp"
#include "support.hpp"

using namespace smpriv;
namespace fs = std::filesystem;

namespace {

DataSplit tiny_split() {
  SyntheticConfig s;
  s.steps = 6;
  s.houses = 2;
  s.days_per_house = 30;
  return split(generate(s), 3);
}

TrainConfig tiny_config() {
  TrainConfig c;
  c.batch_size = 8;
  c.attacker_steps = 2;
  c.noise_dim = 2;
  c.releaser_hidden = {4};
  c.attacker_hidden = {3};
  c.test_attacker_hidden = {3};
  c.iterations = 5;
  c.test_attacker_epochs = 3;
  c.optimizer.learning_rate = 0.01;
  return c;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  auto d = fs::temp_directory_path() / ("smpriv_test_trainer_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

}  // namespace

TEST_CASE("releaser gradient through the attacker matches finite differences") {
  const auto data = tiny_split();
  for (auto term : {EntropyTerm::Predictive, EntropyTerm::AdversarialXent})
    for (double order : {2.0, 4.0})
      for (bool observe : {false, true}) {
        auto cfg = tiny_config();
        cfg.lambda = 0.7;
        cfg.order = order;
        cfg.entropy_term = term;
        cfg.observe_labels = observe;
        cfg.releaser_hidden = {3, 2};
        auto st = init_train_state(cfg, data.train);
        Rng rng(19);
        std::vector<std::size_t> rows{0, 3, 5};
        const auto y = consumption_batch(data.train, rows);
        const auto x = label_batch(data.train, rows);
        const auto noise = draw_noise(rng, cfg.noise_dim, 6, 3);
        const auto g = releaser_gradient(st.releaser, st.attacker, y, x, noise, cfg);
        CHECK(g.stats.loss == doctest::Approx(releaser_objective(st.releaser, st.attacker, y, x, noise, cfg)).epsilon(1e-12));

        auto probe = st.releaser;
        auto pv = tensor_views(probe.net);
        const auto gv = tensor_views(g.grads);
        double worst = 0;
        const double h = 1e-6;
        for (std::size_t k = 0; k < pv.size(); ++k)
          for (std::size_t i = 0; i < pv[k].values.size(); ++i) {
            const double orig = pv[k].values[i];
            pv[k].values[i] = orig + h;
            const double up = releaser_objective(probe, st.attacker, y, x, noise, cfg);
            pv[k].values[i] = orig - h;
            const double down = releaser_objective(probe, st.attacker, y, x, noise, cfg);
            pv[k].values[i] = orig;
            worst = std::max(worst, smpriv::testing::rel_error(gv[k].values[i], (up - down) / (2 * h)));
          }
        INFO(entropy_term_name(term) << " p=" << order << " observe=" << observe);
        CHECK(worst < 1e-4);
      }
}

TEST_CASE("one iteration takes k attacker updates and one releaser update") {
  auto cfg = tiny_config();
  cfg.iterations = 1;
  cfg.lambda = 0.5;
  const auto r = train(cfg, tiny_split());
  REQUIRE(r.history.records.size() == 1);
  CHECK(r.history.records[0].attacker_updates == 2);
  CHECK(r.history.records[0].releaser_updates == 1);
  CHECK(r.history.records[0].entropy_term > 0.0);
}

TEST_CASE("training is deterministic given the seed") {
  auto cfg = tiny_config();
  cfg.lambda = 0.3;
  const auto data = tiny_split();
  const auto a = train(cfg, data), b = train(cfg, data);
  CHECK(fingerprint(a.releaser.net) == fingerprint(b.releaser.net));
  CHECK(fingerprint(a.attacker) == fingerprint(b.attacker));
  const auto dir = scratch("det");
  a.history.write_csv((dir / "a.csv").string());
  b.history.write_csv((dir / "b.csv").string());
  CHECK(slurp(dir / "a.csv") == slurp(dir / "b.csv"));
  CHECK(slurp(dir / "a.csv").rfind("iteration,", 0) == 0);
  cfg.seed = 2;
  CHECK(fingerprint(train(cfg, data).releaser.net) != fingerprint(a.releaser.net));
}

TEST_CASE("lambda = 0 decouples the releaser from the attacker") {
  auto cfg = tiny_config();
  const auto data = tiny_split();
  const auto a = train(cfg, data);
  cfg.attacker_hidden = {5, 2};
  const auto b = train(cfg, data);
  CHECK(fingerprint(a.releaser.net) == fingerprint(b.releaser.net));
  for (const auto& rec : a.history.records) CHECK(rec.entropy_term == 0.0);
}

TEST_CASE("sampler draws without replacement within an epoch") {
  Rng rng(1);
  MinibatchSampler even(10, 5);
  std::multiset<std::size_t> seen;
  for (int i = 0; i < 4; ++i)
    for (auto r : even.next(rng)) seen.insert(r);
  for (std::size_t r = 0; r < 10; ++r) CHECK(seen.count(r) == 2);

  // A short tail is dropped: 10 rows at batch 4 gives two distinct batches per epoch.
  MinibatchSampler odd(10, 4);
  for (int epoch = 0; epoch < 3; ++epoch) {
    std::set<std::size_t> rows;
    for (int i = 0; i < 2; ++i)
      for (auto r : odd.next(rng)) rows.insert(r);
    CHECK(rows.size() == 8);
  }
}

TEST_CASE("test attacker picks its best validation epoch") {
  auto cfg = tiny_config();
  const auto data = tiny_split();
  const auto tr = train(cfg, data);
  const auto ta = train_test_attacker(tr.releaser, data.train, data.validation, cfg);
  CHECK(ta.best_epoch >= 1);
  CHECK(ta.best_epoch <= cfg.test_attacker_epochs);
  CHECK(ta.best_validation_accuracy >= 0.0);
  const auto e = evaluate(tr.releaser, ta.attacker, data.test, 8);
  CHECK(e.z.rows() == static_cast<Eigen::Index>(data.test.size()));
  CHECK(e.accuracy >= 0.0);
  CHECK(e.accuracy <= 1.0);
  const auto e2 = evaluate(tr.releaser, ta.attacker, data.test, 8);
  CHECK(e.z == e2.z);
}

TEST_CASE("config validation names the field") {
  auto cfg = tiny_config();
  cfg.order = 1.5;
  try {
    cfg.validate();
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Config);
    CHECK(std::string(e.what()).find("train.order") != std::string::npos);
  }
  cfg = tiny_config();
  cfg.releaser_hidden.clear();
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = tiny_config();
  cfg.batch_size = 0;
  CHECK_THROWS_AS(cfg.validate(), Error);
  CHECK(parse_entropy_term(entropy_term_name(EntropyTerm::AdversarialXent)) == EntropyTerm::AdversarialXent);
  CHECK(parse_checkpoint_policy(checkpoint_policy_name(CheckpointPolicy::BestValidation)) ==
        CheckpointPolicy::BestValidation);
  CHECK_THROWS_AS(parse_entropy_term("mutual"), Error);
}

TEST_CASE("checkpoints round trip bit for bit") {
  auto cfg = tiny_config();
  cfg.lambda = 0.2;
  cfg.observe_labels = true;
  const auto r = train(cfg, tiny_split());
  const auto dir = scratch("ckpt");
  save_release_model(r.releaser, dir / "releaser.json");
  save_stack(r.attacker, dir / "attacker.json");
  const auto m = load_release_model(dir / "releaser.json");
  CHECK(fingerprint(m.net) == fingerprint(r.releaser.net));
  CHECK(m.y_mean == r.releaser.y_mean);
  CHECK(m.y_std == r.releaser.y_std);
  CHECK(m.noise_dim == r.releaser.noise_dim);
  CHECK(m.observe_labels);
  const auto a = load_stack(dir / "attacker.json");
  CHECK(fingerprint(a) == fingerprint(r.attacker));
  for (std::size_t k = 0; k < tensor_views(a).size(); ++k)
    CHECK(tensor_views(a)[k].values.size() == tensor_views(r.attacker)[k].values.size());

  auto j = stack_to_json(r.attacker);
  j["version"] = 2;
  CHECK_THROWS_AS(stack_from_json(j), Error);
  j = stack_to_json(r.attacker);
  j["tensors"].erase("head.bias");
  CHECK_THROWS_AS(stack_from_json(j), Error);
  CHECK_THROWS_AS(load_stack(dir / "missing.json"), Error);
}
