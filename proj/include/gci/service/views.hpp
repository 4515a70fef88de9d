#pragma once

#include <string>

#include <json.hpp>

#include "gci/deliberation/session.hpp"

namespace gci::service {

/// Who a response is for. Every payload leaving the service goes through a
/// function here, which decides what that viewer may see.
struct Viewer {
  deliberation::ParticipantId id;
  deliberation::Role role = deliberation::Role::contributor;
};

/// Contributors see rankings without numbers until convergence and never
/// see authorship before the reveal. Facilitators see numbers throughout
/// and authorship from convergence on.
nlohmann::json voice_view(const deliberation::Session& session,
                          const deliberation::CollectiveVoice& voice, const Viewer& viewer);

/// Voice plus tensions and convergence, facilitators only.
nlohmann::json facilitator_view(const deliberation::Session& session, const Viewer& viewer,
                                double tension_threshold);

nlohmann::json task_view(const deliberation::Session& session, const deliberation::Task& task);
nlohmann::json session_view(const deliberation::Session& session, const Viewer& viewer);
nlohmann::json contributions_view(const deliberation::Session& session, const Viewer& viewer);
nlohmann::json decision_view(const deliberation::DecisionMatrix& matrix);
nlohmann::json error_body(std::string_view code, std::string_view message);

/// Last line of defence: true when `body` mentions a participant id the
/// viewer may not see at this phase.
bool leaks_identity(const deliberation::Session& session, const Viewer& viewer,
                    std::string_view body);

}  // namespace gci::service
