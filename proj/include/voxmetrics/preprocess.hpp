#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "error.hpp"
#include "percentile.hpp"
#include "volume.hpp"

namespace voxmetrics {

inline constexpr double default_clip_percentile = 99.9;

/// Upper-side clip at the p-th intensity percentile, p in (0, 100].
inline Volume clip_percentile(const Volume& vol, double p)
{
    if (!(p > 0.0 && p <= 100.0))
        throw Error(Errc::bad_percentile, "clip percentile must lie in (0, 100], got " + std::to_string(p));
    std::vector<double> sorted(vol.data().begin(), vol.data().end());
    std::sort(sorted.begin(), sorted.end());
    const double q = percentile_sorted(sorted, p);
    Volume out = vol;
    for (auto& v : out.data())
        v = std::min(v, q);
    return out;
}

/// Rescales to [0, 1]; a constant volume maps to all zeros.
inline Volume minmax_normalize(const Volume& vol)
{
    const auto [lo, hi] = value_range(vol);
    Volume out = vol;
    if (hi == lo) {
        std::fill(out.data().begin(), out.data().end(), 0.0);
        return out;
    }
    const double span = hi - lo;
    for (auto& v : out.data())
        v = (v - lo) / span;
    return out;
}

/// Per-image preprocessing: percentile clip followed by min-max scaling.
inline Volume preprocess_case(const Volume& vol, double clip_p = default_clip_percentile)
{
    return minmax_normalize(clip_percentile(vol, clip_p));
}

// Training schedule manifest. Descriptive only; nothing here trains.

enum class DatasetRole { pretrain, finetune };

struct ProtocolStage {
    std::string name;
    DatasetRole dataset_role = DatasetRole::pretrain;
    int epochs = 0;
    double initial_learning_rate = 0.0;
    friend bool operator==(const ProtocolStage&, const ProtocolStage&) = default;
};

struct ProtocolManifest {
    std::vector<ProtocolStage> stages;
    std::vector<std::string> augmentations;
    double clip_percentile = default_clip_percentile;
    std::string normalization = "minmax";
    friend bool operator==(const ProtocolManifest&, const ProtocolManifest&) = default;
};

/// Names of the augmentation families, in pipeline order.
inline const std::vector<std::string>& augmentation_families()
{
    static const std::vector<std::string> names{
        "rotation", "scaling", "gaussian_noise", "gaussian_blur", "brightness_contrast",
        "low_resolution", "gamma", "mirroring",
    };
    return names;
}

inline void validate(const ProtocolManifest& m)
{
    if (m.stages.size() != 2 || m.stages[0].dataset_role != DatasetRole::pretrain ||
        m.stages[1].dataset_role != DatasetRole::finetune)
        throw Error(Errc::bad_format, "protocol needs exactly a pretrain stage followed by a finetune stage");
    for (const auto& s : m.stages)
        if (s.epochs <= 0 || !(s.initial_learning_rate > 0.0))
            throw Error(Errc::bad_format, "stage '" + s.name + "' needs positive epochs and learning rate");
}

inline ProtocolManifest emit_training_protocol()
{
    ProtocolManifest m;
    m.stages = {
        {"pretrain_human", DatasetRole::pretrain, 1000, 1e-2},
        {"finetune_vervet", DatasetRole::finetune, 200, 1e-4},
    };
    m.augmentations = augmentation_families();
    return m;
}

inline nlohmann::ordered_json to_json(const ProtocolManifest& m)
{
    nlohmann::ordered_json j;
    j["stages"] = nlohmann::ordered_json::array();
    for (const auto& s : m.stages) {
        nlohmann::ordered_json st;
        st["name"] = s.name;
        st["dataset_role"] = s.dataset_role == DatasetRole::pretrain ? "pretrain" : "finetune";
        st["epochs"] = s.epochs;
        st["initial_learning_rate"] = s.initial_learning_rate;
        j["stages"].push_back(std::move(st));
    }
    j["augmentations"] = m.augmentations;
    j["preprocessing"] = {{"clip_percentile", m.clip_percentile}, {"normalization", m.normalization}};
    return j;
}

inline ProtocolManifest protocol_from_json(const nlohmann::json& j)
{
    try {
        ProtocolManifest m;
        for (const auto& st : j.at("stages")) {
            ProtocolStage s;
            s.name = st.at("name").get<std::string>();
            const auto role = st.at("dataset_role").get<std::string>();
            if (role == "pretrain")
                s.dataset_role = DatasetRole::pretrain;
            else if (role == "finetune")
                s.dataset_role = DatasetRole::finetune;
            else
                throw Error(Errc::bad_format, "unknown dataset_role '" + role + "'");
            s.epochs = st.at("epochs").get<int>();
            s.initial_learning_rate = st.at("initial_learning_rate").get<double>();
            m.stages.push_back(std::move(s));
        }
        m.augmentations = j.at("augmentations").get<std::vector<std::string>>();
        m.clip_percentile = j.at("preprocessing").at("clip_percentile").get<double>();
        m.normalization = j.at("preprocessing").at("normalization").get<std::string>();
        validate(m);
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::bad_format, std::string("protocol manifest: ") + e.what());
    }
}

} // namespace voxmetrics
