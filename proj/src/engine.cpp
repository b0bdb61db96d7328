/*
    Licensed under the Apache License, Version 2.0 (the "License");
    you may not use this file except in compliance with the License.
    You may obtain a copy of the License at

        https://www.apache.org/licenses/LICENSE-2.0

    Unless required by applicable law or agreed to in writing, software
    distributed under the License is distributed on an "AS IS" BASIS,
    WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
    See the License for the specific language governing permissions and
    limitations under the License.
*/

#include "autoflow/engine.hpp"

#include "autoflow/channel.hpp"
#include "autoflow/map_operator.hpp"
#include "autoflow/reduce_operator.hpp"

#include <atomic>
#include <deque>
#include <mutex>
#include <random>
#include <thread>

namespace autoflow {

namespace {

using Clock = std::chrono::steady_clock;

struct EndOfStream {};

using SourceInput = std::variant<ControlMessage, EndOfStream>;
using DataEnvelope = std::variant<DataMessage, ControlMessage, EndOfStream>;
using MetricsEnvelope = std::variant<MetricsReport, ControlMessage, EndOfStream>;
using SampleEnvelope = std::variant<Sample, EndOfStream>;

template <typename T>
using ChannelPtr = std::shared_ptr<Channel<T>>;

template <typename T>
ChannelPtr<T> make_channel(std::size_t capacity, const std::shared_ptr<Notifier>& consumer) {
    return std::make_shared<Channel<T>>(capacity, consumer);
}

constexpr std::size_t kUnbounded = Channel<int>::kUnbounded;

double seconds_between(Clock::time_point from, Clock::time_point to) {
    return std::chrono::duration<double>(to - from).count();
}

}  // namespace

void validate(const GraphSpec& spec) {
    if (spec.num_sources == 0 || spec.num_mappers == 0 || spec.num_reducers == 0) {
        throw std::invalid_argument("graph needs at least one source, map and reducer");
    }
    if (spec.channel_capacity == 0) {
        throw std::invalid_argument("channel capacity must be positive");
    }
    if (spec.slots_per_reducer == 0) {
        throw std::invalid_argument("slots_per_reducer must be positive");
    }
    if (spec.latency_every == 0 || spec.throughput_every == 0) {
        throw std::invalid_argument("sampling intervals must be positive");
    }
    validate(spec.scheduler);
}

std::vector<OperatorId> reducer_ids(std::size_t n) {
    std::vector<OperatorId> ids;
    for (std::size_t i = 0; i < n; ++i) {
        ids.push_back(OperatorId{"reducer-" + std::to_string(i)});
    }
    return ids;
}

struct Runtime::Impl {
    GraphSpec spec;
    RoutingTable routing;
    HashRouter router;
    Topology topology;
    std::unique_ptr<KeyPools> pools;
    std::vector<std::unique_ptr<BidGenerator>> generators;
    std::vector<RecordStream> streams;
    SampleCallback on_sample;

    std::vector<std::shared_ptr<Notifier>> source_wake;
    std::vector<std::shared_ptr<Notifier>> map_wake;
    std::vector<std::shared_ptr<Notifier>> reducer_wake;
    std::shared_ptr<Notifier> scheduler_wake = std::make_shared<Notifier>();
    std::shared_ptr<Notifier> sink_wake = std::make_shared<Notifier>();

    std::vector<ChannelPtr<SourceInput>> control_in;                   // [source]
    std::vector<std::vector<ChannelPtr<DataEnvelope>>> source_to_map;  // [source][map]
    std::vector<std::vector<ChannelPtr<DataEnvelope>>> map_to_reducer; // [map][reducer]
    std::vector<std::vector<ChannelPtr<StateTransfer>>> side;          // [sender][receiver]
    std::vector<ChannelPtr<MetricsEnvelope>> metrics;                  // [reducer]
    ChannelPtr<SampleEnvelope> samples;
    std::vector<std::function<void()>> closers;

    std::vector<std::unique_ptr<Tracer>> tracers;
    std::vector<std::unique_ptr<MapOperator>> maps;
    std::vector<std::unique_ptr<ReduceOperator>> reducers;
    std::unique_ptr<Scheduler> scheduler;

    std::atomic<RunState> state{RunState::Built};
    std::atomic<bool> aborted{false};
    std::atomic<bool> stop_requested{false};
    std::mutex error_mutex;
    std::optional<std::pair<std::string, std::string>> error;

    Clock::time_point start;
    std::chrono::milliseconds duration{0};
    std::vector<std::vector<EmitLogEntry>> emitted;
    std::vector<LatencySample> latency;
    std::vector<ThroughputSample> throughput;

    Impl(const GraphSpec& s)
        : spec(s),
          routing(initial_assignment(reducer_ids(s.num_reducers), s.slots_per_reducer)),
          router(routing.slot_list()) {}

    void wire();
    void fail(const std::string& op, const std::string& what);
    void guarded(const std::string& op, const std::function<void()>& body);
    Tracer* tracer_for(const std::string& op);

    void run_source(std::size_t s);
    void run_map(std::size_t m);
    void run_reducer(std::size_t r);
    void run_scheduler();
    void run_sink();

    std::int64_t to_clock(Clock::time_point t) const {
        return std::chrono::duration_cast<std::chrono::nanoseconds>(t.time_since_epoch()).count();
    }
};

Tracer* Runtime::Impl::tracer_for(const std::string& op) {
    tracers.push_back(std::make_unique<Tracer>(op, spec.trace));
    return tracers.back().get();
}

void Runtime::Impl::wire() {
    const auto ns = spec.num_sources;
    const auto nm = spec.num_mappers;
    const auto nr = spec.num_reducers;
    for (std::size_t i = 0; i < ns; ++i) source_wake.push_back(std::make_shared<Notifier>());
    for (std::size_t i = 0; i < nm; ++i) map_wake.push_back(std::make_shared<Notifier>());
    for (std::size_t i = 0; i < nr; ++i) reducer_wake.push_back(std::make_shared<Notifier>());

    // Control, metrics and state-transfer edges are unbounded: they close the
    // scheduler -> source -> map -> reducer -> scheduler cycle, and a bounded
    // edge there could deadlock against data backpressure.
    for (std::size_t s = 0; s < ns; ++s) {
        control_in.push_back(make_channel<SourceInput>(kUnbounded, source_wake[s]));
        closers.push_back([c = control_in.back()] { c->close(); });
        source_to_map.emplace_back();
        for (std::size_t m = 0; m < nm; ++m) {
            source_to_map[s].push_back(make_channel<DataEnvelope>(spec.channel_capacity, map_wake[m]));
            closers.push_back([c = source_to_map[s].back()] { c->close(); });
        }
    }
    for (std::size_t m = 0; m < nm; ++m) {
        map_to_reducer.emplace_back();
        for (std::size_t r = 0; r < nr; ++r) {
            map_to_reducer[m].push_back(make_channel<DataEnvelope>(spec.channel_capacity, reducer_wake[r]));
            closers.push_back([c = map_to_reducer[m].back()] { c->close(); });
        }
    }
    side.resize(nr);
    for (std::size_t i = 0; i < nr; ++i) {
        side[i].resize(nr);
        for (std::size_t j = 0; j < nr; ++j) {
            if (i != j) {
                side[i][j] = make_channel<StateTransfer>(kUnbounded, reducer_wake[j]);
                closers.push_back([c = side[i][j]] { c->close(); });
            }
        }
    }
    for (std::size_t r = 0; r < nr; ++r) {
        metrics.push_back(make_channel<MetricsEnvelope>(kUnbounded, scheduler_wake));
        closers.push_back([c = metrics.back()] { c->close(); });
    }
    samples = make_channel<SampleEnvelope>(kUnbounded, sink_wake);

    topology.source_outputs.assign(ns, nm);
    topology.map_inputs.assign(nm, ns);
    topology.map_outputs.assign(nm, nr);
    topology.reducer_inputs.assign(nr, nm);
    topology.reducer_side_inputs.assign(nr, nr - 1);
    topology.scheduler_metric_inputs = nr;
    topology.scheduler_control_outputs = ns;

    for (std::size_t s = 0; s < ns; ++s) {
        tracer_for("source-" + std::to_string(s));
    }
    for (std::size_t m = 0; m < nm; ++m) {
        maps.push_back(std::make_unique<MapOperator>(OperatorId{"map-" + std::to_string(m)}, ns, routing, router,
                                                     tracer_for("map-" + std::to_string(m))));
    }
    for (std::size_t r = 0; r < nr; ++r) {
        const auto& id = routing.reducers()[r];
        reducers.push_back(std::make_unique<ReduceOperator>(id, nm, routing, router, tracer_for(id.name)));
    }
    tracer_for("scheduler");
    scheduler = std::make_unique<Scheduler>(spec.scheduler, routing);
    emitted.resize(ns);
}

void Runtime::Impl::fail(const std::string& op, const std::string& what) {
    {
        std::lock_guard lock(error_mutex);
        if (!error) {
            error.emplace(op, what);
        }
    }
    aborted = true;
    for (auto& close : closers) {
        close();
    }
    for (auto& n : source_wake) n->notify();
    for (auto& n : map_wake) n->notify();
    for (auto& n : reducer_wake) n->notify();
    scheduler_wake->notify();
}

void Runtime::Impl::guarded(const std::string& op, const std::function<void()>& body) {
    try {
        body();
    } catch (const ChannelClosed&) {
        if (!aborted) {
            fail(op, "channel closed unexpectedly");
        }
    } catch (const std::exception& e) {
        fail(op, e.what());
    } catch (...) {
        fail(op, "unknown exception");
    }
}

namespace {

class Jitter {
public:
    Jitter(std::chrono::microseconds max, std::uint64_t seed) : max_(max), rng_(seed) {}

    void maybe_pause() {
        if (max_.count() <= 0) {
            return;
        }
        if (std::uniform_int_distribution<int>(0, 3)(rng_) == 0) {
            std::this_thread::sleep_for(
                std::chrono::microseconds(std::uniform_int_distribution<std::int64_t>(0, max_.count())(rng_)));
        }
    }

private:
    std::chrono::microseconds max_;
    std::mt19937_64 rng_;
};

}  // namespace

void Runtime::Impl::run_source(std::size_t s) {
    Tracer& tracer = *tracers[s];
    const auto period = std::chrono::duration_cast<std::chrono::nanoseconds>(spec.scheduler.period);
    auto& input = *control_in[s];
    auto& wake = *source_wake[s];
    auto& outputs = source_to_map[s];
    Jitter jitter(spec.max_jitter, spec.jitter_seed * 7919 + s);

    std::deque<ControlMessage> ready;
    bool eos = false;
    std::uint64_t next_t = 0;

    auto pull = [&] {
        while (auto in = input.try_pop()) {
            if (std::holds_alternative<EndOfStream>(*in)) {
                eos = true;
                continue;
            }
            auto& ctrl = std::get<ControlMessage>(*in);
            if (tracer.enabled()) {
                tracer.record(TraceKind::Recv, 0, {}, encode(ctrl));
            }
            ready.push_back(std::move(ctrl));
        }
    };
    auto inject = [&](const ControlMessage& ctrl) {
        if (ctrl.event_time().value != next_t) {
            throw ProtocolError("expected control " + std::to_string(next_t) + ", got " +
                                std::to_string(ctrl.event_time().value));
        }
        ++next_t;
        jitter.maybe_pause();
        for (std::size_t m = 0; m < outputs.size(); ++m) {
            if (tracer.enabled()) {
                tracer.record(TraceKind::Send, static_cast<std::int64_t>(m), {}, encode(ctrl));
            }
            outputs[m]->push(ctrl);
        }
    };
    auto boundary = [&](std::uint64_t t) { return period * static_cast<std::int64_t>(t); };

    std::size_t rr = 0;
    while (!aborted && !stop_requested) {
        auto record = streams[s]();
        if (!record) {
            break;
        }
        // Controls sit at fixed logical offsets in the stream: control T goes out
        // before the first record scheduled at or after T * period.
        while (true) {
            auto seen = wake.generation();
            pull();
            while (!ready.empty() && boundary(ready.front().event_time().value) <= record->scheduled) {
                inject(ready.front());
                ready.pop_front();
            }
            if (eos || aborted || boundary(next_t) > record->scheduled) {
                break;
            }
            wake.wait(seen);
        }
        const auto due = start + record->scheduled;
        while (!aborted && Clock::now() < due) {
            wake.wait_until(wake.generation(), due);
        }
        if (aborted) {
            return;
        }
        DataMessage msg{record->auction_id, record->price, record->emit_index, to_clock(due)};
        jitter.maybe_pause();
        const std::size_t m = rr++ % outputs.size();
        if (tracer.enabled()) {
            tracer.record(TraceKind::Send, static_cast<std::int64_t>(m), {}, encode(msg));
        }
        emitted[s].push_back(EmitLogEntry{s, record->emit_index, msg.key, msg.value});
        outputs[m]->push(std::move(msg));
    }

    while (!aborted) {
        auto seen = wake.generation();
        pull();
        while (!ready.empty()) {
            inject(ready.front());
            ready.pop_front();
        }
        if (eos) {
            break;
        }
        wake.wait(seen);
    }
    if (aborted) {
        return;
    }
    for (auto& out : outputs) {
        out->push(EndOfStream{});
    }
}

void Runtime::Impl::run_map(std::size_t m) {
    auto& op = *maps[m];
    auto& inputs = source_to_map;
    auto& wake = *map_wake[m];
    Jitter jitter(spec.max_jitter, spec.jitter_seed * 7919 + 1000 + m);

    struct Outputs : MapOutputs {
        std::vector<ChannelPtr<DataEnvelope>>* out;
        void send_data(std::size_t r, const DataMessage& msg) override { (*out)[r]->push(msg); }
        void send_control(std::size_t r, const ControlMessage& msg) override { (*out)[r]->push(msg); }
    } outputs;
    outputs.out = &map_to_reducer[m];

    std::vector<bool> closed(spec.num_sources, false);
    std::size_t open = spec.num_sources;
    while (open > 0 && !aborted) {
        auto seen = wake.generation();
        bool progressed = false;
        for (std::size_t s = 0; s < spec.num_sources; ++s) {
            if (closed[s]) {
                continue;
            }
            auto env = inputs[s][m]->try_pop();
            if (!env) {
                continue;
            }
            progressed = true;
            jitter.maybe_pause();
            if (auto* data = std::get_if<DataMessage>(&*env)) {
                op.process(*data, s, outputs);
            } else if (auto* ctrl = std::get_if<ControlMessage>(&*env)) {
                op.process(*ctrl, s, outputs);
            } else {
                closed[s] = true;
                --open;
            }
        }
        if (!progressed) {
            wake.wait(seen);
        }
    }
    if (aborted) {
        return;
    }
    if (op.has_pending_barriers() || op.buffered() > 0) {
        throw ProtocolError(op.id().name + ": inputs ended with an incomplete barrier");
    }
    for (auto& out : map_to_reducer[m]) {
        out->push(EndOfStream{});
    }
}

void Runtime::Impl::run_reducer(std::size_t r) {
    auto& op = *reducers[r];
    auto& wake = *reducer_wake[r];
    Jitter jitter(spec.max_jitter, spec.jitter_seed * 7919 + 2000 + r);

    struct Outputs : ReduceOutputs {
        Impl* impl;
        std::size_t me;
        Clock::time_point busy_until{};
        Clock::time_point last_throughput{};

        void send_transfer(const StateTransfer& transfer) override {
            const auto& ids = impl->routing.reducers();
            auto to = static_cast<std::size_t>(std::find(ids.begin(), ids.end(), transfer.receiver) - ids.begin());
            if (to >= ids.size() || to == me) {
                throw ProtocolError("state transfer to invalid receiver " + transfer.receiver.name);
            }
            impl->side[me][to]->push(transfer);
        }
        void send_metrics(const MetricsReport& report) override { impl->metrics[me]->push(report); }
        void forward_control(const ControlMessage& msg) override { impl->metrics[me]->push(msg); }
        void on_processed(const DataMessage& msg, const SlotId&) override {
            const auto& spec = impl->spec;
            if (spec.reducer_service_time.count() > 0) {
                busy_until = std::max(busy_until, Clock::now()) + spec.reducer_service_time;
                std::this_thread::sleep_until(busy_until);
            }
            const auto now = Clock::now();
            const auto count = impl->reducers[me]->processed();
            if (count % spec.latency_every == 0) {
                LatencySample sample;
                sample.sample_index = count;
                sample.reducer = me;
                sample.latency_ms = static_cast<double>(impl->to_clock(now) - msg.ingest_clock) / 1e6;
                sample.completion_s = seconds_between(impl->start, now);
                sample.ingest_s =
                    static_cast<double>(msg.ingest_clock - impl->to_clock(impl->start)) / 1e9;
                impl->samples->push(Sample{sample});
            }
            if (count % spec.throughput_every == 0) {
                const double dt = seconds_between(last_throughput, now);
                impl->samples->push(Sample{ThroughputSample{me, seconds_between(impl->start, now),
                                                            dt > 0 ? spec.throughput_every / dt : 0.0}});
                last_throughput = now;
            }
        }
    } outputs;
    outputs.impl = this;
    outputs.me = r;
    outputs.last_throughput = start;

    const std::size_t nm = spec.num_mappers;
    const std::size_t nr = spec.num_reducers;
    std::vector<bool> closed(nm, false);
    std::size_t open = nm;
    while (!aborted) {
        if (open == 0 && !op.awaiting_state()) {
            break;
        }
        auto seen = wake.generation();
        bool progressed = false;
        for (std::size_t m = 0; m < nm; ++m) {
            if (closed[m]) {
                continue;
            }
            auto env = map_to_reducer[m][r]->try_pop();
            if (!env) {
                continue;
            }
            progressed = true;
            jitter.maybe_pause();
            if (auto* data = std::get_if<DataMessage>(&*env)) {
                op.process(*data, m, outputs);
            } else if (auto* ctrl = std::get_if<ControlMessage>(&*env)) {
                op.process(*ctrl, m, outputs);
            } else {
                closed[m] = true;
                --open;
            }
        }
        for (std::size_t from = 0; from < nr; ++from) {
            if (from == r) {
                continue;
            }
            if (auto transfer = side[from][r]->try_pop()) {
                progressed = true;
                jitter.maybe_pause();
                op.process(*transfer, outputs);
            }
        }
        if (!progressed) {
            wake.wait(seen);
        }
    }
    if (aborted) {
        return;
    }
    if (op.has_pending_barriers()) {
        throw ProtocolError(op.id().name + ": inputs ended with an incomplete barrier");
    }
    metrics[r]->push(EndOfStream{});
}

void Runtime::Impl::run_scheduler() {
    Tracer& tracer = *tracers.back();
    auto& wake = *scheduler_wake;
    const std::size_t nr = spec.num_reducers;
    std::size_t finished = 0;
    bool final_issued = false;
    auto next_tick_at = start;

    auto broadcast = [&](const ControlMessage& ctrl) {
        for (std::size_t s = 0; s < control_in.size(); ++s) {
            if (tracer.enabled()) {
                tracer.record(TraceKind::Send, static_cast<std::int64_t>(s), {}, encode(ctrl));
            }
            control_in[s]->push(ctrl);
        }
    };

    while (!aborted) {
        auto seen = wake.generation();
        for (std::size_t r = 0; r < nr; ++r) {
            while (auto env = metrics[r]->try_pop()) {
                if (auto* report = std::get_if<MetricsReport>(&*env)) {
                    if (tracer.enabled()) {
                        tracer.record(TraceKind::Recv, static_cast<std::int64_t>(r), {}, encode(*report));
                    }
                    scheduler->on_metrics(*report);
                } else if (auto* ctrl = std::get_if<ControlMessage>(&*env)) {
                    if (tracer.enabled()) {
                        tracer.record(TraceKind::Recv, static_cast<std::int64_t>(r), {}, encode(*ctrl));
                    }
                } else {
                    ++finished;
                }
            }
        }
        if (finished == nr) {
            break;
        }

        const auto now = Clock::now();
        if (!final_issued && scheduler->last_issued_sealed() && now >= next_tick_at) {
            const auto t = scheduler->next_time().value;
            const bool last = stop_requested || spec.scheduler.period * static_cast<std::int64_t>(t) >= duration;
            if (last) {
                broadcast(scheduler->final_tick());
                for (auto& c : control_in) {
                    c->push(EndOfStream{});
                }
                final_issued = true;
                state = RunState::Draining;
            } else {
                broadcast(scheduler->tick());
                next_tick_at = start + spec.scheduler.period * static_cast<std::int64_t>(t + 1);
            }
            continue;
        }
        if (!final_issued && scheduler->last_issued_sealed()) {
            wake.wait_until(seen, next_tick_at);
        } else {
            // A stop request must still wake us when the next tick is gated.
            wake.wait_until(seen, now + std::chrono::milliseconds(50));
        }
    }
}

void Runtime::Impl::run_sink() {
    auto& wake = *sink_wake;
    while (true) {
        auto seen = wake.generation();
        bool done = false;
        while (auto env = samples->try_pop()) {
            if (std::holds_alternative<EndOfStream>(*env)) {
                done = true;
                break;
            }
            const auto& sample = std::get<Sample>(*env);
            if (const auto* l = std::get_if<LatencySample>(&sample)) {
                latency.push_back(*l);
            } else {
                throughput.push_back(std::get<ThroughputSample>(sample));
            }
            if (on_sample) {
                on_sample(sample);
            }
        }
        if (done) {
            return;
        }
        wake.wait(seen);
    }
}

Runtime::Runtime(std::unique_ptr<Impl> impl) : impl_(std::move(impl)) {}
Runtime::Runtime(Runtime&&) noexcept = default;
Runtime& Runtime::operator=(Runtime&&) noexcept = default;
Runtime::~Runtime() = default;

Runtime Runtime::build(const GraphSpec& spec, std::vector<RecordStream> streams, SampleCallback on_sample) {
    validate(spec);
    if (streams.size() != spec.num_sources) {
        throw std::invalid_argument("need exactly one record stream per source");
    }
    auto impl = std::make_unique<Impl>(spec);
    impl->streams = std::move(streams);
    impl->on_sample = std::move(on_sample);
    impl->wire();
    return Runtime(std::move(impl));
}

Runtime Runtime::build(const GraphSpec& spec, const WorkloadSpec& workload, SampleCallback on_sample) {
    validate(spec);
    validate(workload);
    auto impl = std::make_unique<Impl>(spec);
    impl->pools = std::make_unique<KeyPools>(workload, impl->router, impl->routing);
    for (std::size_t s = 0; s < spec.num_sources; ++s) {
        impl->generators.push_back(std::make_unique<BidGenerator>(workload, *impl->pools, s, spec.num_sources));
        impl->streams.push_back([gen = impl->generators.back().get()] { return gen->next(); });
    }
    impl->on_sample = std::move(on_sample);
    impl->wire();
    return Runtime(std::move(impl));
}

const GraphSpec& Runtime::spec() const { return impl_->spec; }
const Topology& Runtime::topology() const { return impl_->topology; }
const RoutingTable& Runtime::initial_routing() const { return impl_->routing; }
const HashRouter& Runtime::router() const { return impl_->router; }
RunState Runtime::state() const { return impl_->state; }

void Runtime::shutdown() {
    impl_->stop_requested = true;
    impl_->scheduler_wake->notify();
    for (auto& n : impl_->source_wake) {
        n->notify();
    }
}

RunResult Runtime::run(std::chrono::milliseconds duration) {
    auto& impl = *impl_;
    if (impl.state != RunState::Built) {
        throw std::logic_error("runtime can only run once");
    }
    impl.duration = duration;
    impl.start = Clock::now();
    impl.state = RunState::Running;

    std::vector<std::thread> operators;
    for (std::size_t s = 0; s < impl.spec.num_sources; ++s) {
        operators.emplace_back([&impl, s] { impl.guarded("source-" + std::to_string(s), [&] { impl.run_source(s); }); });
    }
    for (std::size_t m = 0; m < impl.spec.num_mappers; ++m) {
        operators.emplace_back([&impl, m] { impl.guarded(impl.maps[m]->id().name, [&] { impl.run_map(m); }); });
    }
    for (std::size_t r = 0; r < impl.spec.num_reducers; ++r) {
        operators.emplace_back(
            [&impl, r] { impl.guarded(impl.reducers[r]->id().name, [&] { impl.run_reducer(r); }); });
    }
    operators.emplace_back([&impl] { impl.guarded("scheduler", [&] { impl.run_scheduler(); }); });
    std::thread sink([&impl] { impl.run_sink(); });

    for (auto& t : operators) {
        t.join();
    }
    impl.samples->push(EndOfStream{});
    sink.join();
    impl.state = RunState::Stopped;

    if (impl.error) {
        throw RuntimeAbort(impl.error->first, impl.error->second);
    }

    RunResult result;
    result.wall_seconds = seconds_between(impl.start, Clock::now());
    result.reducers = impl.routing.reducers();
    for (const auto& op : impl.reducers) {
        result.final_state.push_back(op->slots());
        result.processed.push_back(op->processed());
    }
    for (auto& log : impl.emitted) {
        result.emit_log.insert(result.emit_log.end(), log.begin(), log.end());
    }
    result.latency = std::move(impl.latency);
    result.throughput = std::move(impl.throughput);
    result.decisions = impl.scheduler->decision_log();
    result.sealed_history = impl.scheduler->sealed_history();
    result.final_routing = impl.scheduler->shadow_routing();
    result.migrations = impl.scheduler->migrations_issued();
    for (auto& tracer : impl.tracers) {
        auto events = tracer->take();
        result.trace.insert(result.trace.end(), std::make_move_iterator(events.begin()),
                            std::make_move_iterator(events.end()));
    }
    return result;
}

}  // namespace autoflow
