#pragma once

// Worked examples shared by the unit and acceptance tests.

#include <set>
#include <string>

#include "factedit/core.hpp"
#include "factedit/datagen.hpp"

namespace fixtures {

using factedit::Instance;
using factedit::TokenSeq;
using factedit::TripleSet;
using factedit::tokenize;

// The Baymax example: six triples, a draft with one unsupported fact and a
// revision stating all six. The creator's name is spelled Duncan_Rouleau in
// both triples and text.
inline Instance baymax() {
  Instance inst;
  inst.triples = TripleSet{{"Baymax", "creator", "Duncan_Rouleau"},
                           {"Duncan_Rouleau", "nationality", "American"},
                           {"Baymax", "creator", "Steven_T._Seagle"},
                           {"Steven_T._Seagle", "nationality", "American"},
                           {"Baymax", "series", "Big_Hero_6"},
                           {"Big_Hero_6", "starring", "Scott_Adsit"}};
  inst.draft = tokenize(
      "Baymax was created by Duncan_Rouleau , a winner of Eagle_Award . Baymax is a character in Big_Hero_6 .");
  inst.revised = tokenize(
      "Baymax was created by American creators Duncan_Rouleau and Steven_T._Seagle . Baymax is a character in "
      "Big_Hero_6 which stars Scott_Adsit .");
  return inst;
}

/// Entities highlighted in the Baymax example, including the unsupported
/// Eagle_Award that only the draft mentions.
inline std::set<std::string> baymax_inventory() {
  return {"Baymax", "Duncan_Rouleau", "American", "Steven_T._Seagle", "Big_Hero_6", "Scott_Adsit", "Eagle_Award"};
}

// Bakewell pudding: keep four, insert three, drop six, keep the period.
inline TokenSeq pudding_draft() { return tokenize("Bakewell_pudding is Dessert that can be served Warm or cold ."); }
inline TokenSeq pudding_revised() {
  return tokenize("Bakewell_pudding is Dessert that originates from Derbyshire_Dales .");
}
inline TripleSet pudding_triples() { return TripleSet{{"Bakewell_pudding", "region", "Derbyshire_Dales"}}; }

// Insertion example: the revised template mentions an operator that the
// reference lacks.
inline TokenSeq insertion_revised() {
  return tokenize("AGENT-1 performed as PATIENT-3 on BRIDGE-1 mission that was operated by PATIENT-2 .");
}
inline TokenSeq insertion_reference() {
  return tokenize("AGENT-1 served as PATIENT-3 was a crew member of the BRIDGE-1 mission .");
}
inline TripleSet insertion_reference_triples() {
  return TripleSet{{"AGENT-1", "occupation", "PATIENT-3"}, {"AGENT-1", "mission", "BRIDGE-1"}};
}
inline TripleSet insertion_triples() {
  return TripleSet{{"AGENT-1", "occupation", "PATIENT-3"}, {"AGENT-1", "mission", "BRIDGE-1"},
                   {"BRIDGE-1", "operator", "PATIENT-2"}};
}

// Deletion example: the reference carries a full-name fact the revision lacks.
inline TokenSeq deletion_revised() { return tokenize("AGENT-1 was created by BRIDGE-1 and PATIENT-2 ."); }
inline TokenSeq deletion_reference() {
  return tokenize("The character of AGENT-1 , whose full name is PATIENT-1 , was created by BRIDGE-1 and PATIENT-2 .");
}
inline TripleSet deletion_triples() {
  return TripleSet{{"AGENT-1", "creator", "BRIDGE-1"}, {"AGENT-1", "creator", "PATIENT-2"}};
}
inline TripleSet deletion_reference_triples() {
  return TripleSet{{"AGENT-1", "creator", "BRIDGE-1"}, {"AGENT-1", "creator", "PATIENT-2"},
                   {"AGENT-1", "fullName", "PATIENT-1"}};
}

inline factedit::ReferenceMatch match(const TokenSeq& ref, const TripleSet& ref_triples, factedit::EditMode mode) {
  factedit::ReferenceMatch m;
  m.ref_template = ref;
  m.ref_triples = ref_triples;
  m.mode = mode;
  return m;
}

}  // namespace fixtures
