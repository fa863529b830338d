#pragma once

// JSON encodings of runtime values shared by the session protocol, the
// authoring API and the CLI.

#include "loomcast/animation.hpp"
#include "loomcast/format.hpp"
#include "loomcast/trigger.hpp"
#include "loomcast/validate.hpp"
#include "loomcast/world.hpp"

namespace loomcast {

ojson light_fields_to_json(const LightFields& f);
ojson fan_fields_to_json(const FanFields& f);
ojson speaker_fields_to_json(const SpeakerFields& f);

ojson device_state_to_json(const DeviceState& state);
ojson asset_state_to_json(const AssetState& state);
AssetState asset_state_from_json(const ojson& j);

ojson world_to_json(const WorldState& world);
/// Throws SchemaError.
WorldState world_from_json(const ojson& j);

ojson command_to_json(const DeviceCommand& command);
/// Throws SchemaError.
DeviceCommand command_from_json(const ojson& j);

ojson plan_to_json(const AnimationPlan& plan);
/// Throws SchemaError.
AnimationPlan plan_from_json(const ojson& j);

ojson event_to_json(const InputEvent& event);
/// `source` replaces any source named in the document. Throws SchemaError.
InputEvent event_from_json(const ojson& j, const ClientId& source);

ojson issue_to_json(const ValidationIssue& issue);
ojson issues_to_json(const std::vector<ValidationIssue>& issues);

}  // namespace loomcast
