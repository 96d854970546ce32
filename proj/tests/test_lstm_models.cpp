#include <doctest.h>

#include <cmath>
#include <map>
#include <thread>

#include "tsadv/grad_check.hpp"
#include "tsadv/synth.hpp"
#include "tsadv/training.hpp"

using namespace tsadv;

namespace {

ModelDescriptor mini_vanilla(std::size_t f = 2, std::size_t h = 4, double dropout = 0.0) {
    ModelDescriptor d;
    d.kind = ModelKind::vanilla_lstm;
    d.input_size = f;
    d.hidden_size = h;
    d.dense_size = h;
    d.dropout_rate = dropout;
    d.init_seed = 1234;
    return d;
}

ModelDescriptor mini_encdec(std::size_t f = 2, std::size_t h = 4, std::size_t l = 3,
                            double dropout = 0.0) {
    ModelDescriptor d;
    d.kind = ModelKind::encoder_decoder_lstm;
    d.input_size = f;
    d.hidden_size = h;
    d.lookback = l;
    d.dropout_rate = dropout;
    d.init_seed = 4321;
    return d;
}

Tensor random_window(std::size_t l, std::size_t f, RngStream& rng) {
    std::vector<double> v(l * f);
    for (auto& x : v) x = rng.uniform(0.0, 1.0);
    return Tensor::from_data({l, f}, std::move(v));
}

WindowedDataset seasonal_windows(std::size_t n, std::size_t l, std::uint64_t seed) {
    SeasonalParams p;
    p.n_samples = n;
    p.n_features = 3;
    p.period = 12;
    p.noise_sigma = 0.01;
    SeriesFrame frame = minmax_normalize(synth_seasonal(p, seed), 0.0, 1.0);
    return make_windows(frame, l, WindowMode::next_step);
}

}  // namespace

TEST_CASE("lstm cell: zero weights and inputs halve the carried cell state") {
    LstmCellParams p = LstmCellParams::init(2, 3, RngStream(0, "cell"));
    for (auto& t : p.parameters())
        for (auto& v : t.mutable_data()) v = 0.0;
    Tensor x = Tensor::zeros({1, 2});
    LstmState prev{Tensor::from_data({1, 3}, {0.4, -0.6, 1.0}),
                   Tensor::from_data({1, 3}, {0.4, -0.6, 1.0})};
    LstmState next = lstm_cell_step(x, prev, p);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(next.cell.at(0, i) == doctest::Approx(0.5 * prev.cell.at(0, i)));
        CHECK(next.hidden.at(0, i) ==
              doctest::Approx(std::tanh(0.5 * prev.cell.at(0, i)) * 0.5));
    }

    LstmState from_zero = lstm_cell_step(x, LstmState::zero(3), p);
    for (std::size_t i = 0; i < 3; ++i) CHECK(from_zero.hidden.at(0, i) == 0.0);
}

TEST_CASE("lstm cell: step gradient matches finite differences") {
    LstmCellParams p = LstmCellParams::init(3, 4, RngStream(8, "cell-grad"));
    RngStream rng(9, "cell-grad-data");
    Tensor x = random_window(1, 3, rng);
    Tensor target = random_window(1, 4, rng);

    for (auto& named : p.named_parameters("cell")) {
        const std::string& name = named.first;
        Tensor& param = named.second;
        Tensor analytic;
        {
            Tape tape;
            LstmState out = lstm_cell_step(x, LstmState::zero(4), p);
            analytic = tape.backward(mse(out.hidden, target)).at(param);
        }
        Tensor numeric = finite_difference_gradient(
            [&](const Tensor& probe) {
                std::vector<double> saved(param.data().begin(), param.data().end());
                auto span = param.mutable_data();
                std::copy(probe.data().begin(), probe.data().end(), span.begin());
                const double v = mse(lstm_cell_step(x, LstmState::zero(4), p).hidden, target).value();
                std::copy(saved.begin(), saved.end(), span.begin());
                return v;
            },
            param);
        CHECK_MESSAGE(max_relative_error(analytic, numeric) < 1e-4, name);
    }
}

TEST_CASE("vanilla forward: zero weights predict the head bias") {
    auto model = make_model(mini_vanilla());
    for (auto& [name, t] : model->named_parameters())
        for (auto& v : t.mutable_data()) v = (name == "b_head") ? 0.737 : 0.0;
    RngStream rng(1, "window");
    Tensor w = random_window(5, 2, rng);
    CHECK(model->forward(w, ForwardMode::eval()).value() == 0.737);
    CHECK_THROWS_AS(model->forward(Tensor::zeros({0, 2}), ForwardMode::eval()), Error);
    CHECK_THROWS_AS(model->forward(Tensor::zeros({5, 3}), ForwardMode::eval()), Error);
}

TEST_CASE("evaluation-mode forward is bitwise repeatable") {
    auto model = make_model(mini_vanilla(3, 8, 0.1));
    RngStream rng(2, "window");
    Tensor w = random_window(6, 3, rng);
    const double a = model->forward(w, ForwardMode::eval()).value();
    const double b = model->forward(w, ForwardMode::eval()).value();
    CHECK(a == b);
}

TEST_CASE("unrolled vanilla forward equals manual cell-step composition bitwise") {
    auto model = make_model(mini_vanilla(2, 4));
    RngStream rng(3, "window");
    Tensor window = random_window(5, 2, rng);

    std::map<std::string, Tensor> by_name;
    for (auto& [name, t] : model->named_parameters()) by_name.emplace(name, t);
    LstmCellParams cell;
    cell.input_size = 2;
    cell.hidden_size = 4;
    cell.w_in_forget = by_name.at("cell.w_in_forget");
    cell.w_in_input = by_name.at("cell.w_in_input");
    cell.w_in_cand = by_name.at("cell.w_in_cand");
    cell.w_in_out = by_name.at("cell.w_in_out");
    cell.w_rec_forget = by_name.at("cell.w_rec_forget");
    cell.w_rec_input = by_name.at("cell.w_rec_input");
    cell.w_rec_cand = by_name.at("cell.w_rec_cand");
    cell.w_rec_out = by_name.at("cell.w_rec_out");
    cell.b_forget = by_name.at("cell.b_forget");
    cell.b_input = by_name.at("cell.b_input");
    cell.b_cand = by_name.at("cell.b_cand");
    cell.b_out = by_name.at("cell.b_out");

    LstmState state = LstmState::zero(4);
    for (std::size_t t = 0; t < 5; ++t) state = lstm_cell_step(row(window, t), state, cell);
    Tensor hidden = relu(add_bias(matmul(state.hidden, by_name.at("w_dense")), by_name.at("b_dense")));
    Tensor manual = add_bias(matmul(hidden, by_name.at("w_head")), by_name.at("b_head"));

    CHECK(model->forward(window, ForwardMode::eval()).value() == manual.value());
}

TEST_CASE("encoder-decoder forward equals manual encoder/decoder composition bitwise") {
    auto model = make_model(mini_encdec(2, 4, 3));
    RngStream rng(12, "window");
    Tensor window = random_window(3, 2, rng);

    std::map<std::string, Tensor> by_name;
    for (auto& [name, t] : model->named_parameters()) by_name.emplace(name, t);
    auto cell_from = [&](const std::string& prefix, std::size_t in, std::size_t hid) {
        LstmCellParams cell;
        cell.input_size = in;
        cell.hidden_size = hid;
        cell.w_in_forget = by_name.at(prefix + ".w_in_forget");
        cell.w_in_input = by_name.at(prefix + ".w_in_input");
        cell.w_in_cand = by_name.at(prefix + ".w_in_cand");
        cell.w_in_out = by_name.at(prefix + ".w_in_out");
        cell.w_rec_forget = by_name.at(prefix + ".w_rec_forget");
        cell.w_rec_input = by_name.at(prefix + ".w_rec_input");
        cell.w_rec_cand = by_name.at(prefix + ".w_rec_cand");
        cell.w_rec_out = by_name.at(prefix + ".w_rec_out");
        cell.b_forget = by_name.at(prefix + ".b_forget");
        cell.b_input = by_name.at(prefix + ".b_input");
        cell.b_cand = by_name.at(prefix + ".b_cand");
        cell.b_out = by_name.at(prefix + ".b_out");
        return cell;
    };
    LstmCellParams encoder = cell_from("encoder", 2, 4);
    LstmCellParams decoder = cell_from("decoder", 4, 4);

    LstmState enc = LstmState::zero(4);
    for (std::size_t t = 0; t < 3; ++t) enc = lstm_cell_step(row(window, t), enc, encoder);
    LstmState dec = LstmState::zero(4);
    std::vector<Tensor> outs;
    for (std::size_t t = 0; t < 3; ++t) {
        dec = lstm_cell_step(enc.hidden, dec, decoder);
        outs.push_back(add_bias(matmul(dec.hidden, by_name.at("w_head")), by_name.at("b_head")));
    }
    Tensor manual = concat(outs, 1);

    Tensor out = model->forward(window, ForwardMode::eval());
    REQUIRE(out.numel() == manual.numel());
    for (std::size_t i = 0; i < out.numel(); ++i) CHECK(out.at(i) == manual.at(i));
}

TEST_CASE("encoder-decoder: output length equals the repeat count across horizons") {
    for (std::size_t l : {5u, 15u, 25u, 35u, 45u}) {
        auto model = make_model(mini_encdec(3, 4, l));
        RngStream rng(l, "window");
        Tensor w = random_window(l, 3, rng);
        Tensor out = model->forward(w, ForwardMode::eval());
        CHECK(out.shape() == std::vector<std::size_t>{1, l});
    }
    auto model = make_model(mini_encdec(3, 4, 5));
    RngStream rng(0, "window");
    CHECK_THROWS_AS(model->forward(random_window(4, 3, rng), ForwardMode::eval()), Error);
}

TEST_CASE("encoder-decoder: zero weights emit the head bias at every step") {
    auto model = make_model(mini_encdec(2, 4, 3));
    for (auto& [name, t] : model->named_parameters())
        for (auto& v : t.mutable_data()) v = (name == "b_head") ? -0.25 : 0.0;
    RngStream rng(5, "window");
    Tensor out = model->forward(random_window(3, 2, rng), ForwardMode::eval());
    for (std::size_t i = 0; i < 3; ++i) CHECK(out.at(0, i) == -0.25);
}

TEST_CASE("encoder-decoder: window gradient of the summed output matches finite differences") {
    auto model = make_model(mini_encdec(2, 4, 3));
    RngStream rng(6, "window");
    Tensor window = random_window(3, 2, rng);
    Tensor analytic;
    {
        Tape tape;
        Tensor probe = window.clone();
        probe.set_requires_grad(true);
        analytic = tape.backward(sum(model->forward(probe, ForwardMode::eval()))).at(probe);
    }
    Tensor numeric = finite_difference_gradient(
        [&](const Tensor& t) { return sum(model->forward(t, ForwardMode::eval())).value(); },
        window);
    CHECK(max_relative_error(analytic, numeric) < 1e-4);
}

TEST_CASE("miniature end-to-end parameter gradients match finite differences") {
    auto model = make_model(mini_vanilla(2, 4));
    RngStream rng(7, "window");
    Tensor window = random_window(3, 2, rng);
    Tensor target = Tensor::from_data({1, 1}, {0.4});

    for (auto& named : model->named_parameters()) {
        const std::string& name = named.first;
        Tensor& param = named.second;
        Tensor analytic;
        {
            Tape tape;
            Tensor loss = mse(model->forward(window, ForwardMode::eval()), target);
            analytic = tape.backward(loss).at(param);
        }
        Tensor numeric = finite_difference_gradient(
            [&](const Tensor& probe) {
                std::vector<double> saved(param.data().begin(), param.data().end());
                auto span = param.mutable_data();
                std::copy(probe.data().begin(), probe.data().end(), span.begin());
                const double v = mse(model->forward(window, ForwardMode::eval()), target).value();
                std::copy(saved.begin(), saved.end(), span.begin());
                return v;
            },
            param);
        CHECK_MESSAGE(max_relative_error(analytic, numeric) < 1e-4, name);
    }
}

TEST_CASE("training a constant series converges to the constant") {
    WindowedDataset ds;
    ds.lookback = 2;
    ds.mode = WindowMode::next_step;
    ds.feature_names = {"x"};
    for (int i = 0; i < 32; ++i) {
        ds.inputs.push_back(Tensor::full({2, 1}, 0.6));
        ds.targets.push_back(Tensor::full({1, 1}, 0.6));
    }
    ModelDescriptor d = mini_vanilla(1, 6);
    auto model = make_model(d);
    TrainConfig cfg;
    cfg.epochs = 200;
    cfg.batch_size = 8;
    cfg.learning_rate = 0.01;
    cfg.seed = 5;
    TrainResult hist = train(*model, ds, ds, cfg);
    CHECK(hist.train_rmse.back() < 1e-3);
}

TEST_CASE("training reduces RMSE on a learnable seasonal task") {
    WindowedDataset all = seasonal_windows(220, 4, 99);
    WindowedDataset tr = all.slice(0, 180, "train");
    WindowedDataset va = all.slice(180, all.size(), "val");
    ModelDescriptor d = mini_vanilla(3, 12, 0.0);
    auto model = make_model(d);
    const double initial = evaluate(*model, tr);
    TrainConfig cfg;
    cfg.epochs = 30;
    cfg.batch_size = 16;
    cfg.seed = 6;
    train(*model, tr, va, cfg);
    const double final_rmse = evaluate(*model, tr);
    CHECK(final_rmse <= 0.5 * initial);
}

TEST_CASE("same seed reproduces the loss history bitwise") {
    auto run = [](std::uint64_t seed) {
        WindowedDataset all = seasonal_windows(120, 3, 31);
        WindowedDataset tr = all.slice(0, 90, "train");
        WindowedDataset va = all.slice(90, all.size(), "val");
        auto model = make_model(mini_vanilla(3, 6, 0.1));
        TrainConfig cfg;
        cfg.epochs = 6;
        cfg.batch_size = 16;
        cfg.seed = seed;
        TrainResult h = train(*model, tr, va, cfg);
        return std::make_pair(h.train_rmse, h.val_rmse);
    };
    CHECK(run(11) == run(11));
    CHECK(run(11) != run(12));
}

TEST_CASE("divergent training aborts with a diagnostic") {
    WindowedDataset ds;
    ds.lookback = 1;
    ds.mode = WindowMode::next_step;
    ds.feature_names = {"x"};
    for (int i = 0; i < 4; ++i) {
        ds.inputs.push_back(Tensor::full({1, 1}, 1.0));
        ds.targets.push_back(Tensor::full({1, 1}, 0.5));
    }
    auto model = make_model(mini_vanilla(1, 4));
    for (auto& [name, t] : model->named_parameters())
        if (name == "w_head")
            for (auto& v : t.mutable_data()) v = 1e308;
    TrainConfig cfg;
    cfg.epochs = 1;
    cfg.batch_size = 4;
    cfg.seed = 1;
#ifdef NDEBUG
    CHECK_THROWS_WITH_AS(train(*model, ds, ds, cfg), "train: NaN loss at epoch 0, batch 0", Error);
#else
    CHECK_THROWS_AS(train(*model, ds, ds, cfg), Error);
#endif
}

TEST_CASE("evaluate: exact arithmetic and the recomputation oracle") {
    auto model = make_model(mini_vanilla(1, 4));
    for (auto& [name, t] : model->named_parameters())
        for (auto& v : t.mutable_data()) v = 0.0;

    WindowedDataset ds;
    ds.lookback = 1;
    ds.mode = WindowMode::next_step;
    ds.feature_names = {"x"};
    ds.inputs.push_back(Tensor::full({1, 1}, 0.1));
    ds.inputs.push_back(Tensor::full({1, 1}, 0.2));
    ds.targets.push_back(Tensor::full({1, 1}, 3.0));
    ds.targets.push_back(Tensor::full({1, 1}, 4.0));
    // zero model predicts 0 for both rows
    CHECK(evaluate(*model, ds) == doctest::Approx(std::sqrt(25.0 / 2.0)));

    // perfect predictions -> 0
    ds.targets[0] = Tensor::full({1, 1}, 0.0);
    ds.targets[1] = Tensor::full({1, 1}, 0.0);
    CHECK(evaluate(*model, ds) == 0.0);

    WindowedDataset empty;
    CHECK_THROWS_AS(evaluate(*model, empty), Error);

    // brute-force recomputation from dumped (prediction, truth) pairs
    WindowedDataset all = seasonal_windows(80, 3, 55);
    auto trained = make_model(mini_vanilla(3, 6));
    auto pairs = predictions(*trained, all);
    double sq = 0.0;
    for (auto [p, t] : pairs) sq += (p - t) * (p - t);
    CHECK(evaluate(*trained, all) ==
          doctest::Approx(std::sqrt(sq / static_cast<double>(pairs.size()))).epsilon(1e-12));
}

TEST_CASE("independent models train concurrently with per-thread tapes") {
    WindowedDataset all = seasonal_windows(120, 3, 77);
    WindowedDataset tr = all.slice(0, 90, "train");
    WindowedDataset va = all.slice(90, all.size(), "val");
    TrainConfig cfg;
    cfg.epochs = 4;
    cfg.batch_size = 16;
    cfg.seed = 21;

    auto run_sequential = [&](std::uint64_t init_seed) {
        ModelDescriptor d = mini_vanilla(3, 6, 0.1);
        d.init_seed = init_seed;
        auto model = make_model(d);
        TrainResult h = train(*model, tr, va, cfg);
        return h.train_rmse;
    };
    const auto expected_a = run_sequential(100);
    const auto expected_b = run_sequential(200);

    std::vector<double> got_a, got_b;
    std::thread ta([&] { got_a = run_sequential(100); });
    std::thread tb([&] { got_b = run_sequential(200); });
    ta.join();
    tb.join();
    CHECK(got_a == expected_a);  // bitwise, despite the concurrent peer
    CHECK(got_b == expected_b);
}

TEST_CASE("early stopping honors patience") {
    WindowedDataset all = seasonal_windows(120, 3, 31);
    WindowedDataset tr = all.slice(0, 90, "train");
    WindowedDataset va = all.slice(90, all.size(), "val");
    auto model = make_model(mini_vanilla(3, 6));
    TrainConfig cfg;
    cfg.epochs = 200;
    cfg.batch_size = 16;
    cfg.seed = 3;
    cfg.patience = 3;
    TrainResult h = train(*model, tr, va, cfg);
    CHECK(h.epochs_run < 200);
    CHECK(h.early_stopped);
}
