#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "dualnav/checkpoint.hpp"
#include "dualnav/neuralnet.hpp"
#include "dualnav/rng.hpp"
#include "gradcheck.hpp"
#include "helpers.hpp"

using namespace dualnav;
using namespace dualnav::nn;

namespace {

using gradcheck::random_sample;
using gradcheck::Sample;

}  // namespace

TEST_SUITE("neuralnet") {
  TEST_CASE("published layer widths") {
    const auto s = NetworkShape::table1();
    CHECK(s.filters == std::array<int, 3>{32, 64, 64});
    CHECK(s.kernels == std::array<int, 3>{8, 4, 3});
    CHECK(s.dense_units == 256);
    CHECK(s.spatial_chain() == std::array<int, 4>{84, 42, 21, 10});
    CHECK(s.flatten_width() == 6400);
    CHECK(kImageFeatures == 10);
    CHECK(kMapFeatures == 100);
    CHECK(kConcatWidth == 110);
    CHECK(kLstmUnits == 110);
    CHECK(kOutputs == 4);

    auto p = init_params(s, 1);
    CHECK(p.dense2_w.shape == std::vector<int>{10, 256});
    CHECK(p.map_w.shape == std::vector<int>{100, 100});
    CHECK(p.head_w.shape == std::vector<int>{4, 110});
    CHECK(p.lstm_wx.empty());
    auto r = s;
    r.recurrent = true;
    auto pr = init_params(r, 1);
    CHECK(pr.lstm_wx.shape == std::vector<int>{440, 110});
    CHECK(pr.lstm_wh.shape == std::vector<int>{440, 110});
    CHECK(pr.head_w.shape == std::vector<int>{4, 110});
  }

  TEST_CASE("shape validation") {
    NetworkShape s;
    s.image_side = 13;
    CHECK_THROWS_AS(s.validate(), std::invalid_argument);
    s = NetworkShape::compact();
    CHECK_NOTHROW(s.validate());
    s.dense_units = 0;
    CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  }

  TEST_CASE("zero weights return the head bias") {
    auto p = init_params(NetworkShape::compact(), 3).zeros_like();
    p.head_b.data = {0.1, -0.2, 0.3, -0.4};
    Rng rng(1);
    const auto s = random_sample(rng);
    const auto q = forward(p, s.input(), Mode::Eval);
    CHECK(q == QValues{0.1, -0.2, 0.3, -0.4});
  }

  TEST_CASE("eval forward is deterministic and sees the map") {
    Rng rng(2);
    auto p = init_params(NetworkShape::compact(), 4);
    auto s = random_sample(rng);
    const auto q = forward(p, s.input(), Mode::Eval);
    CHECK(forward(p, s.input(), Mode::Eval) == q);
    CHECK(forward(p, s.input(), Mode::Train, 5) == forward(p, s.input(), Mode::Train, 5));
    s.map[37] = s.map[37] == 1.0 ? -1.0 : 1.0;
    CHECK(forward(p, s.input(), Mode::Eval) != q);
  }

  TEST_CASE("bad inputs are rejected") {
    auto p = init_params(NetworkShape::compact(), 4);
    std::vector<double> frame(10), map(100);
    CHECK_THROWS_AS(forward(p, {frame, map}, Mode::Eval), std::invalid_argument);
    LstmState st;
    CHECK_THROWS(forward_recurrent(p, std::span<const Input>{}, st, Mode::Eval));
  }

  TEST_CASE("feedforward gradients match central differences") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      for (const auto& [name, err] : gradcheck::feedforward_errors(seed)) {
        INFO(name);
        CHECK(err <= 1e-4);
      }
    }
  }

  TEST_CASE("recurrent gradients match central differences") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      for (const auto& [name, err] : gradcheck::recurrent_errors(seed)) {
        INFO(name);
        CHECK(err <= 1e-4);
      }
    }
  }

  TEST_CASE("map branch slope is learnable") {
    auto p = init_params(NetworkShape::compact(), 1);
    CHECK(p.map_slope.data == AlignedVector{0.25});
    // Negative pre-activations pass through scaled by the slope.
    auto z = p.zeros_like();
    z.map_b.data.assign(100, -2.0);
    z.map_slope.data = {0.5};
    z.head_w.data[10] = 1.0;  // action 0 reads map feature 0
    Rng rng(3);
    const auto s = random_sample(rng);
    CHECK(forward(z, s.input(), Mode::Eval)[0] == doctest::Approx(-1.0));
  }

  TEST_CASE("recurrent state threads across calls") {
    auto shape = NetworkShape::compact();
    shape.recurrent = true;
    const auto p = init_params(shape, 6);
    Rng rng(4);
    std::vector<Sample> samples;
    for (int t = 0; t < 4; ++t) samples.push_back(random_sample(rng));
    std::vector<Input> seq;
    for (const auto& s : samples) seq.push_back(s.input());
    const auto whole = forward_sequence(p, seq, {}, Mode::Eval);
    const auto head = forward_sequence(p, std::span(seq).first(2), {}, Mode::Eval);
    const auto tail = forward_sequence(p, std::span(seq).subspan(2), head.final_state, Mode::Eval);
    CHECK(tail.q[1] == whole.q[3]);
    CHECK(tail.final_state == whole.final_state);
    // A fresh state gives a different answer for the same frame.
    CHECK(forward_sequence(p, std::span(seq).subspan(3), {}, Mode::Eval).q[0] != whole.q[3]);
  }

  TEST_CASE("without recurrent weights a constant input settles") {
    auto shape = NetworkShape::compact();
    shape.recurrent = true;
    auto p = init_params(shape, 8);
    std::fill(p.lstm_wh.data.begin(), p.lstm_wh.data.end(), 0.0);
    Rng rng(5);
    const auto s = random_sample(rng);
    const std::vector<Input> seq(300, s.input());
    const auto q = forward_recurrent(p, seq, {}, Mode::Eval);
    for (int a = 0; a < kOutputs; ++a) CHECK(q[299][a] == doctest::Approx(q[298][a]).epsilon(1e-9));
  }

  TEST_CASE("masked mean squared error") {
    const std::vector<QValues> pred{{1, 2, 3, 4}, {0, 0, 0, 1}};
    const std::vector<QValues> target{{0, 0, 0, 0}, {9, 9, 9, 3}};
    const std::vector<int> taken{2, 3};
    CHECK(mse_loss(pred, target, taken) == doctest::Approx((9.0 + 4.0) / 2));
    const auto g = mse_loss_gradient(pred, target, taken);
    CHECK(g[0] == QValues{0, 0, 3, 0});
    CHECK(g[1] == QValues{0, 0, 0, -2});
    const std::vector<int> bad{4, 0};
    CHECK_THROWS(mse_loss(pred, target, bad));
  }

  TEST_CASE("adam update size") {
    auto p = init_params(NetworkShape::compact(), 1);
    auto before = p;
    auto state = AdamState::for_params(p);
    CHECK(state.config.learning_rate == 0.001);
    auto grads = p.zeros_like();
    adam_step(p, grads, state);
    CHECK(p == before);
    CHECK(state.step == 1);

    p.head_b.data[0] = 1.0;
    grads.head_b.data[0] = 3.0;
    state = AdamState::for_params(p);
    adam_step(p, grads, state);
    CHECK(p.head_b.data[0] == doctest::Approx(0.999).epsilon(1e-9));

    // With a constant gradient the bias-corrected step stays at the rate.
    for (int i = 0; i < 500; ++i) {
      const double prev = p.head_b.data[0];
      adam_step(p, grads, state);
      CHECK(prev - p.head_b.data[0] == doctest::Approx(0.001).epsilon(1e-6));
    }
  }

  TEST_CASE("clones are independent") {
    auto p = init_params(NetworkShape::compact(), 1);
    auto c = clone_params(p);
    CHECK(c == p);
    c.head_b.data[0] += 1.0;
    CHECK_FALSE(c == p);
  }

  TEST_CASE("initialisation is seeded") {
    CHECK(init_params(NetworkShape::compact(), 1) == init_params(NetworkShape::compact(), 1));
    CHECK_FALSE(init_params(NetworkShape::compact(), 1) == init_params(NetworkShape::compact(), 2));
    CHECK(init_params(NetworkShape::table1(), 1).all_finite());
  }

  TEST_CASE("checkpoint round trip") {
    auto shape = NetworkShape::compact();
    shape.recurrent = true;
    auto p = init_params(shape, 9);
    auto adam = AdamState::for_params(p);
    auto g = p.zeros_like();
    g.head_b.data = {1, 2, 3, 4};
    adam_step(p, g, adam);
    const auto dir = testutil::scratch_dir("ckpt");
    save_checkpoint(dir / "a.bin", p, &adam, {{"method", "drqn100"}});
    const auto back = load_checkpoint(dir / "a.bin");
    CHECK(back.params == p);
    REQUIRE(back.adam);
    CHECK(*back.adam == adam);
    CHECK(back.meta.at("method") == "drqn100");

    save_checkpoint(dir / "b.bin", p);
    CHECK_FALSE(load_checkpoint(dir / "b.bin").adam.has_value());

    testutil::write_file(dir / "junk.bin", "not a checkpoint at all");
    CHECK_THROWS(load_checkpoint(dir / "junk.bin"));
    CHECK_THROWS(load_checkpoint(dir / "missing.bin"));
  }
}
