#pragma once

// JSON documents served to clients: the layout document of a graph build,
// the session history and the stage segmentation.

#include <string>
#include <string_view>

#include <json.hpp>

#include "ivg/layout.hpp"
#include "ivg/pipeline.hpp"
#include "ivg/store.hpp"

namespace ivg {

inline constexpr std::string_view kLayoutSchema = "ivg.layout/v1";

// Modification colours shared by glyphs, edges and the history view.
std::string_view action_color(EditAction action);

nlohmann::json params_to_json(const BuildParams& params);
nlohmann::json edit_op_to_json(const EditOp& op);
nlohmann::json stages_to_json(const StageSegmentation& stages);
nlohmann::json session_to_json(const Session& session);
nlohmann::json step_to_json(const StepRecord& step);

nlohmann::json layout_document(const GraphLayout& layout);

// Steps in order; each consecutive pair reports its similarity and, when it
// is at least s_min, the edit ops between them.
nlohmann::json history_document(const SessionSnapshot& snapshot, double s_min);

// {"command": "split"|"merge", "step": k}; throws StageCommandError.
StageCommand stage_command_from_json(const nlohmann::json& body);

}  // namespace ivg
