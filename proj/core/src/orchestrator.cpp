#include "tti/orchestrator.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <mutex>
#include <numeric>
#include <thread>

#include "tti/inspect.hpp"
#include "tti/rng.hpp"
#include "tti/vec_ops.hpp"

namespace tti {

namespace {

// Seed stream tags.
enum : std::uint64_t {
    kTagTrainData = 1,
    kTagTestData,
    kTagPartition,
    kTagMalicious,
    kTagPoison,
    kTagModel,
    kTagLocal,
    kTagOta,
};

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
    unsigned workers = std::thread::hardware_concurrency();
    if (workers == 0) workers = 1;
    workers = std::min<unsigned>(workers, 4);
    if (workers <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&] {
        for (std::size_t i; (i = next.fetch_add(1)) < n;) {
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

double median_of(std::vector<double> v) {
    if (v.empty()) throw InternalError("median_of: empty input");
    std::sort(v.begin(), v.end());
    std::size_t n = v.size();
    if (n % 2 == 1) return v[n / 2];
    return 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

std::atomic<std::int64_t> TrustedUploads::tripwire_{0};

TrustedUploads::TrustedUploads(std::vector<std::vector<double>> deltas)
    : deltas_(std::move(deltas)) {
    if (deltas_.empty()) throw AggregationError("trusted uploads: empty set");
}

std::vector<double> TrustedUploads::aggregate(double noise_std, std::uint64_t seed) const {
    return ota_aggregate(deltas_, noise_std, seed);
}

const std::vector<std::vector<double>>& TrustedUploads::raw_deltas() const {
    tripwire_.fetch_add(1);
    return deltas_;
}

std::vector<double> ota_aggregate(const std::vector<std::vector<double>>& deltas,
                                  double noise_std, std::uint64_t seed) {
    if (deltas.empty()) throw AggregationError("ota_aggregate: empty update set");
    if (noise_std < 0.0) throw ConfigError("ota_aggregate: noise_std must be >= 0");
    auto mean = vec::mean_rows(deltas);
    if (noise_std > 0.0) {
        Rng rng(seed);
        for (auto& v : mean) v += noise_std * rng.normal();
    }
    return mean;
}

EvalResult evaluate(const FlatModel& model, const LabeledDataset& clean_test,
                    const TriggerSpec& trigger) {
    if (clean_test.empty()) throw ConfigError("evaluate: empty test set");
    EvalResult res;
    std::size_t correct = 0;
    for (std::size_t i = 0; i < clean_test.size(); ++i) {
        if (predict_class(model, clean_test.features[i]) == clean_test.labels[i]) ++correct;
    }
    res.mta = static_cast<double>(correct) / static_cast<double>(clean_test.size());

    std::size_t hits = 0, total = 0;
    for (std::size_t i = 0; i < clean_test.size(); ++i) {
        if (clean_test.labels[i] == trigger.target_label) continue;
        auto triggered = apply_trigger_for_eval(clean_test.features[i], trigger);
        if (predict_class(model, triggered) == trigger.target_label) ++hits;
        ++total;
    }
    res.asr = total > 0 ? static_cast<double>(hits) / static_cast<double>(total) : 0.0;
    return res;
}

int RoundRecord::tier_count(Tier t) const {
    int n = 0;
    for (Tier x : tiers) n += (x == t) ? 1 : 0;
    return n;
}

int RoundRecord::accepted_suspect_count() const {
    int n = 0;
    for (const auto& [id, ok] : verdicts) {
        if (!ok) continue;
        if (std::find(final_participants.begin(), final_participants.end(), id) !=
            final_participants.end())
            ++n;
    }
    return n;
}

DefenseMode defense_mode_from_string(const std::string& name) {
    if (name == "none") return DefenseMode::None;
    if (name == "tti") return DefenseMode::Tti;
    if (name == "tda_only") return DefenseMode::TdaOnly;
    if (name == "l2_only") return DefenseMode::L2Only;
    if (name == "spikiness_only") return DefenseMode::SpikinessOnly;
    if (name == "model_wise") return DefenseMode::ModelWise;
    if (name == "bev") return DefenseMode::Bev;
    throw ConfigError("unknown defense mode: " + name);
}

std::string to_string(DefenseMode mode) {
    switch (mode) {
        case DefenseMode::None: return "none";
        case DefenseMode::Tti: return "tti";
        case DefenseMode::TdaOnly: return "tda_only";
        case DefenseMode::L2Only: return "l2_only";
        case DefenseMode::SpikinessOnly: return "spikiness_only";
        case DefenseMode::ModelWise: return "model_wise";
        case DefenseMode::Bev: return "bev";
    }
    return "unknown";
}

std::string to_string(Tier tier) {
    switch (tier) {
        case Tier::Trusted: return "trusted";
        case Tier::Suspicious: return "suspicious";
        case Tier::Malicious: return "malicious";
    }
    return "unknown";
}

void validate_scenario(const ScenarioConfig& c) {
    if (c.num_clients < 2) throw ConfigError("scenario.num_clients: need at least 2 clients");
    if (c.rounds < 1) throw ConfigError("scenario.rounds: need at least 1 round");
    if (c.warmup_rounds < 0 || c.warmup_rounds >= c.rounds)
        throw ConfigError("scenario.warmup_rounds: must satisfy 0 <= warmup < rounds");
    if (c.rho <= 0.0 || c.rho >= 1.0) throw ConfigError("scenario.rho: must lie in (0,1)");
    if (c.ota_noise_std < 0.0) throw ConfigError("scenario.ota_noise_std: must be >= 0");
    if (c.attack.kind != AttackKind::None) {
        int m = c.malicious_ids.empty() ? c.malicious_count
                                        : static_cast<int>(c.malicious_ids.size());
        if (m < 1) throw ConfigError("scenario.malicious_count: attack requires >= 1 malicious client");
        if (m >= c.num_clients)
            throw ConfigError("scenario.malicious_count: must be smaller than num_clients");
        for (int id : c.malicious_ids)
            if (id < 0 || id >= c.num_clients)
                throw ConfigError("scenario.malicious_ids: id outside client range");
    }
    if (static_cast<int>(c.trust_weights.size()) != kIndicatorCount)
        throw ConfigError("scenario.trust_weights: expected one weight per indicator");
    validate_simplex_weights(c.trust_weights);
    validate_tier_spec(c.tiering);
    if (c.data.classes < 2) throw ConfigError("scenario.data.classes: need at least 2 classes");
    if (c.data.feature_dim < c.data.classes)
        throw ConfigError("scenario.data.feature_dim: must be >= class count");
    if (c.data.train_per_class < 1 || c.data.test_per_class < 1)
        throw ConfigError("scenario.data: per-class sample counts must be >= 1");
    if (c.data.cluster_spread < 0.0)
        throw ConfigError("scenario.data.cluster_spread: must be >= 0");
    if (c.data.dirichlet_alpha <= 0.0)
        throw ConfigError("scenario.data.dirichlet_alpha: must be > 0");
    if (c.train.learning_rate <= 0.0)
        throw ConfigError("scenario.train.learning_rate: must be > 0");
    if (c.train.local_epochs < 0) throw ConfigError("scenario.train.local_epochs: must be >= 0");
    if (c.train.batch_size < 1) throw ConfigError("scenario.train.batch_size: must be >= 1");
    validate_trigger(c.trigger, c.data.feature_dim, c.data.classes);
    if (c.rs_only_after_round < 0)
        throw ConfigError("scenario.rs_only_after_round: must be >= 0");
}

Simulation::Simulation(const ScenarioConfig& config) : config_(config) {
    validate_scenario(config_);
    const auto seed = config_.seed;
    const auto& d = config_.data;

    auto train_full = generate_dataset(d.classes, d.feature_dim, d.train_per_class,
                                       d.cluster_spread, derive_seed(seed, kTagTrainData));
    clean_test_ = generate_dataset(d.classes, d.feature_dim, d.test_per_class, d.cluster_spread,
                                   derive_seed(seed, kTagTestData));
    client_data_ = dirichlet_partition(
        train_full, {config_.num_clients, d.dirichlet_alpha, derive_seed(seed, kTagPartition)});

    is_malicious_.assign(static_cast<std::size_t>(config_.num_clients), false);
    if (config_.attack.kind != AttackKind::None) {
        if (!config_.malicious_ids.empty()) {
            malicious_ids_ = config_.malicious_ids;
        } else {
            std::vector<int> perm(static_cast<std::size_t>(config_.num_clients));
            std::iota(perm.begin(), perm.end(), 0);
            Rng rng(derive_seed(seed, kTagMalicious));
            rng.shuffle(perm);
            perm.resize(static_cast<std::size_t>(config_.malicious_count));
            malicious_ids_ = perm;
        }
        std::sort(malicious_ids_.begin(), malicious_ids_.end());
        malicious_ids_.erase(std::unique(malicious_ids_.begin(), malicious_ids_.end()),
                             malicious_ids_.end());
        for (int id : malicious_ids_) {
            is_malicious_[static_cast<std::size_t>(id)] = true;
            client_data_[static_cast<std::size_t>(id)] =
                poison_dataset(client_data_[static_cast<std::size_t>(id)], config_.trigger,
                               derive_seed(seed, kTagPoison, static_cast<std::uint64_t>(id)));
        }
    }

    Dims dims{d.feature_dim, config_.hidden_layers, d.classes};
    model_ = init_model(dims, derive_seed(seed, kTagModel));
    ledger_ = ReputationLedger(static_cast<std::size_t>(config_.num_clients),
                               config_.warmup_rounds);
    prev_global_update_.assign(model_.size(), 1.0);  // unbiased hint before round 2
}

std::vector<UpdateDelta> Simulation::train_all_clients() {
    const int k = config_.num_clients;
    std::vector<UpdateDelta> deltas(static_cast<std::size_t>(k));

    std::vector<std::size_t> benign, malicious;
    for (int i = 0; i < k; ++i)
        (is_malicious_[static_cast<std::size_t>(i)] ? malicious : benign)
            .push_back(static_cast<std::size_t>(i));

    auto train_cfg_for = [&](std::size_t id) {
        TrainConfig cfg = config_.train;
        cfg.seed = derive_seed(config_.seed, kTagLocal, static_cast<std::uint64_t>(round_),
                               static_cast<std::uint64_t>(id));
        return cfg;
    };

    parallel_for(benign.size(), [&](std::size_t i) {
        std::size_t id = benign[i];
        auto [trained, delta] = local_train(model_, client_data_[id], train_cfg_for(id), LossSpec{});
        delta.client_id = static_cast<int>(id);
        delta.round = round_;
        deltas[id] = std::move(delta);
    });

    if (!malicious.empty()) {
        std::vector<double> benign_norms;
        benign_norms.reserve(benign.size());
        for (std::size_t id : benign) benign_norms.push_back(vec::l2_norm(deltas[id].delta));

        AttackSpec spec = config_.attack;
        if (spec.kind == AttackKind::BoundedScaling && spec.norm_bound <= 0.0) {
            // Relative bound: factor x the median benign norm the attacker last
            // observed; the first round falls back to the current round's norms.
            const auto& basis = prev_benign_norms_.empty() ? benign_norms : prev_benign_norms_;
            if (basis.empty())
                throw ConfigError("bounded_scaling: no benign norms available to resolve bound");
            spec.norm_bound = spec.norm_bound_factor * median_of(basis);
        }

        parallel_for(malicious.size(), [&](std::size_t i) {
            std::size_t id = malicious[i];
            auto delta = attack_local_round(model_, client_data_[id], spec, train_cfg_for(id),
                                            &prev_global_update_);
            delta.client_id = static_cast<int>(id);
            delta.round = round_;
            deltas[id] = std::move(delta);
        });

        prev_benign_norms_ = std::move(benign_norms);
    } else {
        prev_benign_norms_.clear();
        for (std::size_t id : benign) prev_benign_norms_.push_back(vec::l2_norm(deltas[id].delta));
    }
    return deltas;
}

std::vector<double> Simulation::stage_one_scores(const std::vector<UpdateDelta>& deltas) const {
    std::vector<double> scores(deltas.size(), 0.0);
    for (std::size_t i = 0; i < deltas.size(); ++i) {
        auto ind = compute_indicators(deltas[i].delta, model_.params);
        auto normalized = normalize_indicators(ind, config_.transforms);
        switch (config_.defense) {
            case DefenseMode::TdaOnly: scores[i] = normalized[0]; break;
            case DefenseMode::L2Only: scores[i] = normalized[1]; break;
            case DefenseMode::SpikinessOnly: scores[i] = normalized[2]; break;
            default: scores[i] = trust_score(normalized, config_.trust_weights); break;
        }
    }
    return scores;
}

RoundRecord Simulation::step() {
    ++round_;
    const int k = config_.num_clients;

    RoundRecord rec;
    rec.round = round_;
    rec.tiers.assign(static_cast<std::size_t>(k), Tier::Trusted);

    last_deltas_ = train_all_clients();
    const auto& deltas = last_deltas_;
    std::vector<double> update;

    auto apply_update = [&](const std::vector<double>& u) {
        for (std::size_t i = 0; i < model_.params.size(); ++i) model_.params[i] += u[i];
        prev_global_update_ = u;
    };

    if (config_.defense == DefenseMode::None) {
        std::vector<std::vector<double>> all;
        all.reserve(static_cast<std::size_t>(k));
        for (auto& d : deltas) all.push_back(d.delta);
        update = ota_aggregate(all, config_.ota_noise_std,
                               derive_seed(config_.seed, kTagOta, static_cast<std::uint64_t>(round_)));
        apply_update(update);
        rec.final_participants.resize(static_cast<std::size_t>(k));
        std::iota(rec.final_participants.begin(), rec.final_participants.end(), 0);
        rs_increment(ledger_, rec.final_participants);
    } else if (config_.defense == DefenseMode::Bev) {
        auto scores = stage_one_scores(deltas);
        rec.tiers = tier_clients(scores, config_.tiering);
        std::vector<double> weighted(model_.size(), 0.0);
        double mass = 0.0;
        for (int id = 0; id < k; ++id) {
            double w = 0.0;
            switch (rec.tiers[static_cast<std::size_t>(id)]) {
                case Tier::Trusted: w = 1.0; break;
                case Tier::Suspicious: w = 0.1; break;
                case Tier::Malicious: w = 0.0; break;
            }
            if (w > 0.0) {
                vec::axpy(w, deltas[static_cast<std::size_t>(id)].delta, weighted);
                mass += w;
                rec.final_participants.push_back(id);
            }
        }
        if (mass <= 0.0) {
            rec.stalled = true;
            rec.final_participants.clear();
            prev_global_update_.assign(model_.size(), 0.0);
        } else {
            double inv_mass = 1.0 / mass;
            for (auto& v : weighted) v *= inv_mass;
            if (config_.ota_noise_std > 0.0) {
                Rng rng(derive_seed(config_.seed, kTagOta, static_cast<std::uint64_t>(round_)));
                for (auto& v : weighted) v += config_.ota_noise_std * rng.normal();
            }
            apply_update(weighted);
            rs_increment(ledger_, rec.final_participants);
        }
    } else if (config_.rs_only_after_round > 0 && round_ > config_.rs_only_after_round) {
        // Mature-reputation shortcut: eligibility comes from the ledger alone.
        std::vector<int> all_ids(static_cast<std::size_t>(k));
        std::iota(all_ids.begin(), all_ids.end(), 0);
        auto retained = rs_mad_filter(ledger_, all_ids, round_);
        rec.n_rs_filtered = static_cast<int>(all_ids.size() - retained.size());
        for (int id = 0; id < k; ++id)
            rec.tiers[static_cast<std::size_t>(id)] = Tier::Malicious;
        std::vector<std::vector<double>> kept;
        for (int id : retained) {
            rec.tiers[static_cast<std::size_t>(id)] = Tier::Trusted;
            kept.push_back(deltas[static_cast<std::size_t>(id)].delta);
        }
        TrustedUploads uploads(std::move(kept));
        update = uploads.aggregate(config_.ota_noise_std,
                                   derive_seed(config_.seed, kTagOta, static_cast<std::uint64_t>(round_)));
        apply_update(update);
        rec.final_participants = retained;
        rs_increment(ledger_, rec.final_participants);
    } else {
        auto scores = stage_one_scores(deltas);
        rec.tiers = tier_clients(scores, config_.tiering);

        std::vector<int> trusted_ids, suspicious_ids;
        for (int id = 0; id < k; ++id) {
            if (rec.tiers[static_cast<std::size_t>(id)] == Tier::Trusted) trusted_ids.push_back(id);
            if (rec.tiers[static_cast<std::size_t>(id)] == Tier::Suspicious)
                suspicious_ids.push_back(id);
        }

        auto transmitters = rs_mad_filter(ledger_, trusted_ids, round_);
        rec.n_rs_filtered += static_cast<int>(trusted_ids.size() - transmitters.size());

        if (transmitters.empty()) {
            // No trusted reference available; promote the best-scored eligible
            // client so the layer-wise stage still has a baseline.
            ++anomaly_count_;
            std::vector<int> all_ids(static_cast<std::size_t>(k));
            std::iota(all_ids.begin(), all_ids.end(), 0);
            auto eligible = rs_mad_filter(ledger_, all_ids, round_);
            int pick = eligible.front();
            for (int id : eligible)
                if (scores[static_cast<std::size_t>(id)] > scores[static_cast<std::size_t>(pick)])
                    pick = id;
            transmitters = {pick};
            suspicious_ids.erase(std::remove(suspicious_ids.begin(), suspicious_ids.end(), pick),
                                 suspicious_ids.end());
        }

        std::vector<std::vector<double>> trusted_deltas;
        trusted_deltas.reserve(transmitters.size());
        for (int id : transmitters) trusted_deltas.push_back(deltas[static_cast<std::size_t>(id)].delta);
        TrustedUploads uploads(std::move(trusted_deltas));
        auto ota = uploads.aggregate(config_.ota_noise_std,
                                     derive_seed(config_.seed, kTagOta, static_cast<std::uint64_t>(round_)));

        LayerMap inspect_map = (config_.defense == DefenseMode::ModelWise)
                                   ? LayerMap{{"model", 0, model_.size()}}
                                   : model_.layer_map;
        auto reference = slice_layers(ota, inspect_map);

        std::vector<int> accepted_ids;
        if (suspicious_ids.size() >= 2) {
            InspectionInput input;
            input.candidate_ids = suspicious_ids;
            input.rho = config_.rho;
            input.reference = reference;
            for (int id : suspicious_ids) {
                input.slices.push_back(slice_layers(deltas[static_cast<std::size_t>(id)].delta,
                                                    inspect_map));
                input.reputations.push_back(
                    static_cast<double>(ledger_.scores[static_cast<std::size_t>(id)]));
            }
            for (const auto& v : inspect_candidates(input)) {
                rec.verdicts.push_back({v.client_id, v.accepted});
                if (v.accepted) accepted_ids.push_back(v.client_id);
            }
        } else if (suspicious_ids.size() == 1) {
            // Clustering needs two candidates; fall back to a trusted-population
            // baseline. Only reachable under threshold tiering.
            int id = suspicious_ids.front();
            std::vector<std::vector<std::vector<double>>> trusted_slices;
            for (const auto& d : uploads.raw_deltas())
                trusted_slices.push_back(slice_layers(d, inspect_map));
            auto v = inspect_single_candidate(
                id, slice_layers(deltas[static_cast<std::size_t>(id)].delta, inspect_map),
                reference, trusted_slices, config_.rho);
            rec.verdicts.push_back({v.client_id, v.accepted});
            if (v.accepted) accepted_ids.push_back(v.client_id);
        }

        auto accepted_retained = rs_mad_filter(ledger_, accepted_ids, round_);
        rec.n_rs_filtered += static_cast<int>(accepted_ids.size() - accepted_retained.size());

        rec.final_participants = transmitters;
        rec.final_participants.insert(rec.final_participants.end(), accepted_retained.begin(),
                                      accepted_retained.end());
        std::sort(rec.final_participants.begin(), rec.final_participants.end());

        // Reconstruction: |T| * ota_mean recovers the trusted sum, so the final
        // update is the exact mean over the participant set (modulo channel noise).
        double n_trusted = static_cast<double>(transmitters.size());
        double n_total = n_trusted + static_cast<double>(accepted_retained.size());
        update.assign(model_.size(), 0.0);
        vec::axpy(n_trusted / n_total, ota, update);
        for (int id : accepted_retained)
            vec::axpy(1.0 / n_total, deltas[static_cast<std::size_t>(id)].delta, update);
        apply_update(update);
        rs_increment(ledger_, rec.final_participants);
    }

    auto eval = evaluate(model_, clean_test_, config_.trigger);
    rec.mta = eval.mta;
    rec.asr = eval.asr;
    rec.rs_snapshot = ledger_.scores;
    return rec;
}

ExperimentResult Simulation::run() {
    ExperimentResult result;
    result.records.reserve(static_cast<std::size_t>(config_.rounds));
    for (int t = 0; t < config_.rounds; ++t) result.records.push_back(step());
    result.final_model = model_;
    result.anomaly_count = anomaly_count_;
    return result;
}

ExperimentResult run_experiment(const ScenarioConfig& config) {
    Simulation sim(config);
    return sim.run();
}

double scenario_objective(const std::vector<double>& beta, const ScenarioConfig& scenario,
                          double lambda) {
    validate_simplex_weights(beta);
    ScenarioConfig cfg = scenario;
    cfg.trust_weights = beta;
    auto result = run_experiment(cfg);
    const auto& last = result.records.back();
    return last.mta - lambda * last.asr;
}

}  // namespace tti
