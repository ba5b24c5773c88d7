#include <algorithm>
#include <set>

#include "doctest.h"
#include "ecladts/error.hpp"
#include "ecladts/synthdata.hpp"
#include "ecladts/trainer.hpp"
#include "support.hpp"

using namespace ecladts;
using ecladts::testing::random_tensor;

TEST_CASE("split") {
  const Split s = split(10, 0.8, 3);
  CHECK(s.train.size() == 8);
  CHECK(s.val.size() == 2);
  const Split again = split(10, 0.8, 3);
  CHECK(again.train == s.train);
  CHECK(again.val == s.val);
  std::set<std::size_t> all(s.train.begin(), s.train.end());
  for (std::size_t v : s.val) CHECK(all.insert(v).second);
  CHECK(all.size() == 10);
  CHECK(*all.rbegin() == 9);
  CHECK_THROWS_AS(split(3, 0.99, 0), ValidationError);
}

TEST_CASE("augmentation") {
  Rng rng(5);
  const Tensor batch = random_tensor({3, 2, 64}, rng);

  SUBCASE("all magnitudes zero is the identity") {
    CHECK(augment(batch, AugmentPolicy{}, 1) == batch);
  }
  SUBCASE("noise changes values but not shapes") {
    AugmentPolicy p;
    p.noise_sigma = 0.1;
    const Tensor out = augment(batch, p, 1);
    CHECK(out.shape() == batch.shape());
    CHECK_FALSE(out == batch);
  }
  SUBCASE("time warp keeps endpoints") {
    AugmentPolicy p;
    p.warp_knots = 4;
    p.warp_sigma = 0.05;
    const Tensor out = augment(batch, p, 2);
    CHECK_FALSE(out == batch);
    for (std::size_t s = 0; s < 3; ++s) {
      for (std::size_t c = 0; c < 2; ++c) {
        const std::size_t base = (s * 2 + c) * 64;
        CHECK(out[base] == doctest::Approx(batch[base]).epsilon(1e-12));
        CHECK(out[base + 63] == doctest::Approx(batch[base + 63]).epsilon(1e-12));
      }
    }
  }
  SUBCASE("same seed, same result") {
    const AugmentPolicy p{0.1, 4, 0.05, 0.05};
    CHECK(augment(batch, p, 9) == augment(batch, p, 9));
  }
}

TEST_CASE("training is deterministic and early stopping honours patience") {
  const Dataset d = gen_l2(96, 96, 4);
  const Split sp = split(d.size(), 0.75, 4);
  TrainConfig cfg;
  cfg.lr = 1e-3;
  cfg.max_epochs = 4;
  cfg.batch_size = 16;
  cfg.seed = 4;
  cfg.augment = {0.1, 4, 0.05, 0.05};
  const ModelSpec spec = ModelSpec::defaults("tiny-cnn", 1, 96, 2);

  Model a = Model::build(spec, 4);
  Model b = Model::build(spec, 4);
  const TrainResult ra = train(a, d, sp, cfg);
  const TrainResult rb = train(b, d, sp, cfg);
  CHECK(ra.checkpoint.serialize() == rb.checkpoint.serialize());
  CHECK(ra.report.epochs.size() == 4);

  SUBCASE("patience 1 stops right after the best epoch stops improving") {
    TrainConfig c = cfg;
    c.patience = 1;
    c.max_epochs = 50;
    c.lr = 1e-9;  // nothing improves after the first epochs
    Model m = Model::build(spec, 4);
    const TrainResult r = train(m, d, sp, c);
    CHECK(r.report.early_stopped);
    CHECK(r.report.epochs.size() <= r.report.best_epoch + 3);
  }
  SUBCASE("the returned model holds the best-validation weights") {
    const Evaluation e = evaluate(a, d, sp.val);
    CHECK(e.nll == doctest::Approx(ra.report.best_val_nll).epsilon(1e-12));
  }
}

TEST_CASE("train config validation") {
  TrainConfig c;
  CHECK(c.lr == 1e-5);
  CHECK(c.weight_decay == 0.01);
  c.batch_size = 0;
  CHECK_THROWS_AS(c.validate(), ValidationError);
  const json j = TrainConfig{};
  CHECK(j.get<TrainConfig>().patience == TrainConfig{}.patience);
}
