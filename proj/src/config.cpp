#include "blockprune/config.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

namespace blockprune {

using nlohmann::json;

std::string_view to_string(PipelineMode m) {
    switch (m) {
    case PipelineMode::DBP: return "dbp";
    case PipelineMode::RANDOM: return "random";
    case PipelineMode::DBP_A: return "dbp-a";
    case PipelineMode::DBP_B: return "dbp-b";
    case PipelineMode::DBP_C: return "dbp-c";
    }
    return "?";
}

PipelineMode parse_mode(std::string_view s) {
    if (s == "dbp" || s == "DBP") return PipelineMode::DBP;
    if (s == "random" || s == "RANDOM") return PipelineMode::RANDOM;
    if (s == "dbp-a" || s == "DBP_A") return PipelineMode::DBP_A;
    if (s == "dbp-b" || s == "DBP_B") return PipelineMode::DBP_B;
    if (s == "dbp-c" || s == "DBP_C") return PipelineMode::DBP_C;
    throw std::invalid_argument("unknown pipeline mode: " + std::string(s));
}

bool is_iterative(PipelineMode m) { return m != PipelineMode::DBP_A && m != PipelineMode::DBP_B; }
bool uses_mimic(PipelineMode m) { return m != PipelineMode::DBP_A && m != PipelineMode::DBP_C; }
bool uses_criterion(PipelineMode m) { return m != PipelineMode::RANDOM; }

std::string_view to_string(TeacherPolicy p) { return p == TeacherPolicy::original ? "original" : "previous_round"; }

TeacherPolicy parse_teacher_policy(std::string_view s) {
    if (s == "previous_round") return TeacherPolicy::previous_round;
    if (s == "original") return TeacherPolicy::original;
    throw std::invalid_argument("unknown teacher policy: " + std::string(s));
}

int RunConfig::finetune_epochs_per_round() const {
    if (recovery.epochs_per_round > 0) return recovery.epochs_per_round;
    return (baseline.epochs + 4) / 5;
}

json to_json(const TrainSchedule& s) {
    json ms = json::array();
    for (const auto& [e, lr] : s.lr_milestones) ms.push_back({e, lr});
    return {{"epochs", s.epochs},           {"lr_milestones", ms},
            {"momentum", s.momentum},       {"weight_decay", s.weight_decay},
            {"batch_size", s.batch_size},   {"augmentation", to_string(s.augmentation)}};
}

TrainSchedule train_schedule_from_json(const json& j, TrainSchedule s) {
    s.epochs = j.value("epochs", s.epochs);
    if (j.contains("lr_milestones")) {
        s.lr_milestones.clear();
        for (const auto& m : j.at("lr_milestones")) s.lr_milestones.emplace_back(m.at(0).get<int>(), m.at(1).get<float>());
    }
    s.momentum = j.value("momentum", s.momentum);
    s.weight_decay = j.value("weight_decay", s.weight_decay);
    s.batch_size = j.value("batch_size", s.batch_size);
    if (j.contains("augmentation")) s.augmentation = parse_augmentation(j.at("augmentation").get<std::string>());
    return s;
}

json to_json(const RunConfig& c) {
    const auto& syn = c.dataset.synthetic;
    return {
        {"arch", arch_to_json(c.arch)},
        {"dataset",
         {{"kind", c.dataset.kind},
          {"path", c.dataset.path},
          {"synthetic",
           {{"num_classes", syn.num_classes},
            {"n_train", syn.n_train},
            {"n_test", syn.n_test},
            {"image_shape", {syn.image_shape.c, syn.image_shape.h, syn.image_shape.w}},
            {"seed", syn.seed},
            {"noise", syn.noise},
            {"jitter", syn.jitter}}}}},
        {"seed", c.seed},
        {"deterministic", c.deterministic},
        {"baseline", to_json(c.baseline)},
        {"probe",
         {{"reduction", to_string(c.probe.reduction)},
          {"learning_rates", c.probe.training.learning_rates},
          {"momentum", c.probe.training.momentum},
          {"batch_size", c.probe.training.batch_size},
          {"max_features", c.probe.max_features}}},
        {"schedule", {{"G", c.global_ratio}, {"R", c.rounds}}},
        {"recovery",
         {{"alpha", c.recovery.alpha},
          {"teacher", to_string(c.recovery.teacher)},
          {"epochs_per_round", c.recovery.epochs_per_round},
          {"learning_rate", c.recovery.learning_rate}}},
        {"latency", {{"enabled", c.latency.enabled}, {"samples", c.latency.samples}, {"warmup", c.latency.warmup}}},
        {"mode", to_string(c.mode)},
        {"output_dir", c.output_dir},
        {"baseline_checkpoint", c.baseline_checkpoint},
        {"probe_final_model", c.probe_final_model},
    };
}

RunConfig run_config_from_json(const json& j) {
    RunConfig c;
    if (j.contains("arch")) c.arch = arch_from_json(j.at("arch"));
    if (j.contains("dataset")) {
        const json& d = j.at("dataset");
        c.dataset.kind = d.value("kind", c.dataset.kind);
        c.dataset.path = d.value("path", c.dataset.path);
        if (d.contains("synthetic")) {
            const json& s = d.at("synthetic");
            auto& syn = c.dataset.synthetic;
            syn.num_classes = s.value("num_classes", syn.num_classes);
            syn.n_train = s.value("n_train", syn.n_train);
            syn.n_test = s.value("n_test", syn.n_test);
            if (s.contains("image_shape"))
                syn.image_shape = {s.at("image_shape").at(0).get<int>(), s.at("image_shape").at(1).get<int>(),
                                   s.at("image_shape").at(2).get<int>()};
            syn.seed = s.value("seed", syn.seed);
            syn.noise = s.value("noise", syn.noise);
            syn.jitter = s.value("jitter", syn.jitter);
        }
    }
    c.seed = j.value("seed", c.seed);
    c.deterministic = j.value("deterministic", c.deterministic);
    if (j.contains("baseline")) c.baseline = train_schedule_from_json(j.at("baseline"), c.baseline);
    if (j.contains("probe")) {
        const json& p = j.at("probe");
        if (p.contains("reduction")) c.probe.reduction = parse_reduction(p.at("reduction").get<std::string>());
        c.probe.training.learning_rates = p.value("learning_rates", c.probe.training.learning_rates);
        c.probe.training.momentum = p.value("momentum", c.probe.training.momentum);
        c.probe.training.batch_size = p.value("batch_size", c.probe.training.batch_size);
        c.probe.max_features = p.value("max_features", c.probe.max_features);
    }
    if (j.contains("schedule")) {
        c.global_ratio = j.at("schedule").value("G", c.global_ratio);
        c.rounds = j.at("schedule").value("R", c.rounds);
    }
    if (j.contains("recovery")) {
        const json& r = j.at("recovery");
        c.recovery.alpha = r.value("alpha", c.recovery.alpha);
        if (r.contains("teacher")) c.recovery.teacher = parse_teacher_policy(r.at("teacher").get<std::string>());
        c.recovery.epochs_per_round = r.value("epochs_per_round", c.recovery.epochs_per_round);
        c.recovery.learning_rate = r.value("learning_rate", c.recovery.learning_rate);
    }
    if (j.contains("latency")) {
        const json& l = j.at("latency");
        c.latency.enabled = l.value("enabled", c.latency.enabled);
        c.latency.samples = l.value("samples", c.latency.samples);
        c.latency.warmup = l.value("warmup", c.latency.warmup);
    }
    if (j.contains("mode")) c.mode = parse_mode(j.at("mode").get<std::string>());
    c.output_dir = j.value("output_dir", c.output_dir);
    c.baseline_checkpoint = j.value("baseline_checkpoint", c.baseline_checkpoint);
    c.probe_final_model = j.value("probe_final_model", c.probe_final_model);
    return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw std::invalid_argument("cannot open config: " + path.string());
    try {
        return run_config_from_json(json::parse(f));
    } catch (const json::exception& e) {
        throw std::invalid_argument("malformed config " + path.string() + ": " + e.what());
    }
}

Dataset load_dataset(const DatasetSpec& spec) {
    if (spec.kind == "cifar10") {
        if (spec.path.empty()) throw std::invalid_argument("cifar10 dataset needs a path");
        return load_cifar10(spec.path);
    }
    if (spec.kind == "synthetic") return synthetic_dataset(spec.synthetic);
    throw std::invalid_argument("unknown dataset kind: " + spec.kind);
}

}  // namespace blockprune
