#include "loomcast/trigger.hpp"

#include <algorithm>

#include "loomcast/text.hpp"

namespace loomcast {

std::string_view event_kind(const InputEvent& event) {
  static constexpr std::string_view names[] = {"transcript", "tap", "touch"};
  return names[event.index()];
}

const ClientId& event_source(const InputEvent& event) {
  return std::visit([](const auto& e) -> const ClientId& { return e.source; }, event);
}

ArmedTrigger::ArmedTrigger(Trigger trigger, const WorldState& predecessor, const Story& story)
    : trigger_(std::move(trigger)) {
  if (const auto* kw = std::get_if<KeywordTrigger>(&trigger_)) {
    phrase_ = normalize(kw->phrase);
  } else if (const auto* touch = std::get_if<TouchTrigger>(&trigger_)) {
    auto it = predecessor.assets.find(touch->target);
    if (it == predecessor.assets.end() || !it->second.present) {
      throw TouchTargetAbsent("touch target '" + touch->target + "' is not present");
    }
    const AssetDecl* decl = story.find_asset(touch->target);
    const double h = decl != nullptr ? decl->half_extent_m : 0.1;
    bounds_ = Box{it->second.position, {h, h, h}};
    threshold_m_ = touch->threshold_m;
  }
}

FeedResult ArmedTrigger::feed_tokens(const std::vector<std::string>& tokens) {
  tokens_used_ = 0;
  if (phrase_.empty()) return FeedResult::Pending;
  for (const auto& token : tokens) {
    ++tokens_used_;
    window_.push_back(token);
    if (window_.size() > phrase_.size()) window_.pop_front();
    if (window_.size() == phrase_.size() && std::equal(window_.begin(), window_.end(), phrase_.begin())) {
      fired_ = true;
      return FeedResult::Fired;
    }
  }
  return FeedResult::Pending;
}

FeedResult ArmedTrigger::feed(const InputEvent& event) {
  if (fired_) return FeedResult::Fired;
  if (std::holds_alternative<TapTrigger>(trigger_)) {
    fired_ = std::holds_alternative<TapEvent>(event);
  } else if (std::holds_alternative<KeywordTrigger>(trigger_)) {
    if (const auto* t = std::get_if<TranscriptEvent>(&event)) return feed_tokens(normalize(t->text));
  } else if (const auto* touch = std::get_if<TouchEvent>(&event)) {
    fired_ = is_finite(touch->position) && bounds_->inflated(threshold_m_).contains(touch->position);
  }
  return fired_ ? FeedResult::Fired : FeedResult::Pending;
}

}  // namespace loomcast
