#include <benchmark/benchmark.h>

#include "tsadv/attacks.hpp"
#include "tsadv/training.hpp"

namespace {

using namespace tsadv;

ModelDescriptor vanilla_desc(std::size_t f, std::size_t h, std::size_t dense) {
    ModelDescriptor d;
    d.kind = ModelKind::vanilla_lstm;
    d.input_size = f;
    d.hidden_size = h;
    d.dense_size = dense;
    d.dropout_rate = 0.1;
    d.init_seed = 7;
    return d;
}

Tensor window(std::size_t l, std::size_t f) {
    RngStream rng(11, "bench-window");
    std::vector<double> v(l * f);
    for (auto& x : v) x = rng.uniform(0.0, 1.0);
    return Tensor::from_data({l, f}, std::move(v));
}

void ForwardEval(benchmark::State& state) {
    const auto l = static_cast<std::size_t>(state.range(0));
    auto model = make_model(vanilla_desc(7, 100, 100));
    Tensor w = window(l, 7);
    for (auto _ : state) {
        benchmark::DoNotOptimize(model->forward(w, ForwardMode::eval()).value());
    }
}
BENCHMARK(ForwardEval)->Arg(1)->Arg(5)->Arg(15);

void ForwardBackward(benchmark::State& state) {
    const auto l = static_cast<std::size_t>(state.range(0));
    auto model = make_model(vanilla_desc(7, 100, 100));
    Tensor w = window(l, 7);
    Tensor target = Tensor::full({1, 1}, 0.5);
    auto params = model->parameters();
    for (auto _ : state) {
        Tape tape;
        Tensor loss = mse(model->forward(w, ForwardMode::eval()), target);
        Gradients g = tape.backward(loss);
        benchmark::DoNotOptimize(g.at(params.front()).data().data());
    }
}
BENCHMARK(ForwardBackward)->Arg(1)->Arg(5)->Arg(15);

void FgsmStep(benchmark::State& state) {
    auto model = make_model(vanilla_desc(7, 100, 100));
    std::vector<Tensor> inputs{window(5, 7)};
    std::vector<Tensor> targets{Tensor::full({1, 1}, 0.5)};
    for (auto _ : state) {
        auto batch = fgsm(*model, inputs, targets, 0.1);
        benchmark::DoNotOptimize(batch.linf[0]);
    }
}
BENCHMARK(FgsmStep);

void EncDecForward(benchmark::State& state) {
    ModelDescriptor d;
    d.kind = ModelKind::encoder_decoder_lstm;
    d.input_size = 5;
    d.hidden_size = 100;
    d.lookback = 5;
    d.dropout_rate = 0.1;
    d.init_seed = 9;
    auto model = make_model(d);
    Tensor w = window(5, 5);
    for (auto _ : state) {
        benchmark::DoNotOptimize(model->forward(w, ForwardMode::eval()).data().data());
    }
}
BENCHMARK(EncDecForward);

}  // namespace

BENCHMARK_MAIN();
