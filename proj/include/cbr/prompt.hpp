#pragma once
#include <string>
#include <vector>

#include "cbr/case_base.hpp"
#include "cbr/gateway.hpp"
#include "cbr/taxonomy.hpp"

namespace cbr {

struct PromptConfig {
    PromptMode mode = PromptMode::RiskUnaware;
    int shots = 0;
    bool include_cot = true;
    // When set, each example block is sent as its own user message instead of
    // being folded into the single task message.
    bool examples_as_messages = false;
    // Optional directory holding system_prompt.txt to override the built-in
    // system prompt text.
    std::string template_dir;
};

// Canonical paper sweeps use 0/1/3/5 shots; other values work but are
// flagged by this predicate for reporting.
inline bool canonical_shot_count(int shots) {
    return shots == 0 || shots == 1 || shots == 3 || shots == 5;
}

struct PromptBundle {
    std::string system_text;
    std::string user_text;
    std::vector<std::string> example_blocks;
};

std::string build_system_prompt(const std::string& template_dir = "");
std::string build_task_prompt(const ScdsEvent& event, PromptMode mode);
std::vector<std::string> render_examples(const std::vector<Case>& cases);

// bundle + ready-to-send chat request; throws ShotMismatch when
// cases.size() != cfg.shots.
struct AssembledPrompt {
    PromptBundle bundle;
    ChatRequest request;
};
AssembledPrompt assemble(const PromptConfig& cfg, const ScdsEvent& event,
                         const std::vector<Case>& cases, const std::string& model_id);

std::string prompt_digest(const PromptBundle& bundle);

}  // namespace cbr
