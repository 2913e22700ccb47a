// Copyright 2026 The compsim Authors
// SPDX-License-Identifier: Apache-2.0

// Command strings with their expected parses, shared by the unit tests and
// the acceptance runner.

#pragma once

#include <numbers>
#include <string>
#include <vector>

#include "compsim/edit.hpp"

namespace compsim::testing {

class CommandBuilder {
 public:
  CommandBuilder(Operation op, int id) {
    c_.operation = op;
    c_.instance_id = id;
  }
  CommandBuilder(Operation op, Selector sel, std::string name = {}) {
    c_.operation = op;
    c_.selector = sel;
    c_.name = std::move(name);
  }
  CommandBuilder& axis(Axis a) { return c_.config.axis = a, *this; }
  CommandBuilder& distance(double d) { return c_.config.distance = d, *this; }
  CommandBuilder& angle(double a) { return c_.config.angle = a, *this; }
  CommandBuilder& factor(double f) { return c_.config.factor = f, *this; }
  CommandBuilder& from(std::string s) { return c_.config.source_scene = std::move(s), *this; }
  CommandBuilder& at(Vec3 p) { return c_.config.position = p, *this; }
  CommandBuilder& yaw(double y) { return c_.config.yaw = y, *this; }
  CommandBuilder& with(int id) { return c_.config.other_id = id, *this; }
  CommandBuilder& with(Selector sel, std::string name = {}) {
    c_.config.other_selector = sel;
    c_.config.other_name = std::move(name);
    return *this;
  }
  operator EditCommand() const { return c_; }

 private:
  EditCommand c_;
};

struct ValidCase {
  std::string text;
  EditCommand expected;
};

struct MalformedCase {
  std::string text;
  // The error must point at the first occurrence of `anchor`, or at the end
  // of the input when `anchor` is empty.
  std::string anchor;
  // Must appear in the error's expected-token set (skipped when empty).
  std::string expected_token;

  std::size_t position() const { return anchor.empty() ? text.size() : text.find(anchor); }
};

inline std::vector<ValidCase> valid_corpus() {
  using O = Operation;
  using B = CommandBuilder;
  const Selector it = Selector::It;
  const Selector name = Selector::Name;
  return {
      {"move #1 10 cm along x", B(O::Translate, 1).axis(Axis::X).distance(0.10)},
      {"move #1 10 cm along x-axis", B(O::Translate, 1).axis(Axis::X).distance(0.10)},
      {"move #1 10 cm along the x-axis", B(O::Translate, 1).axis(Axis::X).distance(0.10)},
      {"Move #1 10CM Along X", B(O::Translate, 1).axis(Axis::X).distance(0.10)},
      {"move #1 10cm along x", B(O::Translate, 1).axis(Axis::X).distance(0.10)},
      {"move #1 along x 10 cm", B(O::Translate, 1).axis(Axis::X).distance(0.10)},
      {"  move   #1   10   cm   along   x  ", B(O::Translate, 1).axis(Axis::X).distance(0.10)},
      {"translate #2 by 0.5 m along y", B(O::Translate, 2).axis(Axis::Y).distance(0.5)},
      {"shift #3 -25 mm along z", B(O::Translate, 3).axis(Axis::Z).distance(-0.025)},
      {"move it 1 m on z", B(O::Translate, it).axis(Axis::Z).distance(1.0)},
      {"move \"red ball\" 2 m along y", B(O::Translate, name, "red ball").axis(Axis::Y).distance(2.0)},
      {"move 'blue ball' 3 meters along the z axis", B(O::Translate, name, "blue ball").axis(Axis::Z).distance(3.0)},
      {"move #7 1e-2 m along x", B(O::Translate, 7).axis(Axis::X).distance(0.01)},
      {"move #4 +0.25 metres along y", B(O::Translate, 4).axis(Axis::Y).distance(0.25)},
      {"move #12345 0 m along x", B(O::Translate, 12345).axis(Axis::X).distance(0.0)},
      {"move #1 150 millimeters on the y axis", B(O::Translate, 1).axis(Axis::Y).distance(0.15)},
      {"rotate it 90 deg around z", B(O::Rotate, it).axis(Axis::Z).angle(90)},
      {"rotate #1 45 degrees about x", B(O::Rotate, 1).axis(Axis::X).angle(45)},
      {"turn #2 -30 deg around y", B(O::Rotate, 2).axis(Axis::Y).angle(-30)},
      {"rotate #3 by 180 deg around the z-axis", B(O::Rotate, 3).axis(Axis::Z).angle(180)},
      {"spin #1 3.14159 rad around z", B(O::Rotate, 1).axis(Axis::Z).angle(3.14159 * 180.0 / std::numbers::pi)},
      {"rotate \"red ball\" 15\xc2\xb0 around z", B(O::Rotate, name, "red ball").axis(Axis::Z).angle(15)},
      {"turn it around x by 10 degrees", B(O::Rotate, it).axis(Axis::X).angle(10)},
      {"rotate #1 360 deg around z", B(O::Rotate, 1).axis(Axis::Z).angle(360)},
      {"scale #1 2x", B(O::Scale, 1).factor(2)},
      {"scale #1 2 x", B(O::Scale, 1).factor(2)},
      {"resize #2 0.5x along y", B(O::Scale, 2).factor(0.5).axis(Axis::Y)},
      {"enlarge #2 by 3x", B(O::Scale, 2).factor(3)},
      {"enlarge #2 by a factor of 1.5", B(O::Scale, 2).factor(1.5)},
      {"shrink #3 2x", B(O::Scale, 3).factor(0.5)},
      {"scale it by factor 4 along z", B(O::Scale, it).factor(4).axis(Axis::Z)},
      {"scale #5 1.25 times", B(O::Scale, 5).factor(1.25)},
      {"resize \"blue ball\" 2x along the x axis", B(O::Scale, name, "blue ball").factor(2).axis(Axis::X)},
      {"shrink #1 by 4x along y", B(O::Scale, 1).factor(0.25).axis(Axis::Y)},
      {"select #1", B(O::Select, 1)},
      {"highlight #2", B(O::Select, 2)},
      {"select it", B(O::Select, it)},
      {"select \"red ball\"", B(O::Select, name, "red ball")},
      {"copy #1", B(O::Replicate, 1)},
      {"duplicate #2 50 cm along x", B(O::Replicate, 2).distance(0.5).axis(Axis::X)},
      {"replicate it", B(O::Replicate, it)},
      {"clone #3 along y -1 m", B(O::Replicate, 3).axis(Axis::Y).distance(-1.0)},
      {"copy \"red ball\" 2 m along z", B(O::Replicate, name, "red ball").distance(2.0).axis(Axis::Z)},
      {"delete #1", B(O::Delete, 1)},
      {"remove #2", B(O::Delete, 2)},
      {"erase it", B(O::Delete, it)},
      {"delete \"blue ball\"", B(O::Delete, name, "blue ball")},
      {"add #1 from \"toy\"", B(O::Add, 1).from("toy")},
      {"add \"red ball\" from \"toy\" at 1 2 0.5", B(O::Add, name, "red ball").from("toy").at({1, 2, 0.5})},
      {"insert #2 from toy at (1, -2, 3) m yaw 90 deg", B(O::Add, 2).from("toy").at({1, -2, 3}).yaw(90)},
      {"import #1 from 'other scene' scaled 2x", B(O::Add, 1).from("other scene").factor(2)},
      {"add #3 from \"lib\" at 100 200 300 cm scaled by 0.5x yaw 45 deg",
       B(O::Add, 3).from("lib").at({1, 2, 3}).factor(0.5).yaw(45)},
      {"add #1 from toy yaw -90 deg", B(O::Add, 1).from("toy").yaw(-90)},
      {"swap #1 with #2", B(O::Swap, 1).with(2)},
      {"swap #1 and #2", B(O::Swap, 1).with(2)},
      {"exchange it with \"blue ball\"", B(O::Swap, it).with(Selector::Name, "blue ball")},
      {"swap #1 with #3 in \"kitchen\"", B(O::Swap, 1).with(3).from("kitchen")},
      {"swap \"red ball\" with #2", B(O::Swap, name, "red ball").with(2)},
      {"swap #2 with it", B(O::Swap, 2).with(Selector::It)},
      {"swap #1 #2", B(O::Swap, 1).with(2)},
      {"swap red ball with blue ball", B(O::Swap, name, "red ball").with(Selector::Name, "blue ball")},
      {"move the robot arm 10 cm along x-axis", B(O::Translate, name, "robot arm").axis(Axis::X).distance(0.10)},
      {"select Red Ball", B(O::Select, name, "red ball")},
      {"rotate blue ball by 30 deg about y", B(O::Rotate, name, "blue ball").axis(Axis::Y).angle(30)},
  };
}

inline std::vector<MalformedCase> malformed_corpus() {
  return {
      {"", "", "move"},
      {"jump #1", "jump", "move"},
      {"move", "", "#<id>"},
      {"move #1", "", "<number> <unit>"},
      {"move #1 10 along x", "along", "cm"},
      {"move #1 10 cm", "", "along <axis>"},
      {"move #1 10 cm along w", "w", "x"},
      {"move 10 cm along x", "10", "#<id>"},
      {"move # 10 cm along x", " 10", "<digits>"},
      {"move \"red 10 cm along x", "\"", "closing \""},
      {"move #1 10 cm along x; delete #2", ";", ""},
      {"move #1 10 cm along x along y", "along y", ""},
      {"move #1 1e999 m along x", "1e999", ""},
      {"rotate #1 90 around z", "around", "deg"},
      {"rotate #1 around z", "", "<number> deg"},
      {"rotate #1 90 deg", "", "around <axis>"},
      {"rotate #1 90 deg around z by 5 deg", "by", ""},
      {"enlarge #2", "", "<number>x"},
      {"scale #1 -2x", "-2x", "<number>x"},
      {"scale #1 0x", "0x", "<number>x"},
      {"scale #1 2x along", "", "x"},
      {"scale #1 by a half", "half", "factor"},
      {"delete #1 now", "now", "end of command"},
      {"select #1 #2", "#2", "end of command"},
      {"add #1", "", "from \"<scene>\""},
      {"add it from toy", "it", "#<id>"},
      {"add #1 from", "", "\"<scene>\""},
      {"add #1 from toy at 1 2", "", "<number>"},
      {"swap #1", "", "with <target>"},
      {"swap #1 with", "", "#<id>"},
      {"copy #1 50 cm", "", "along <axis>"},
      {"copy #1 along x", "", "<number> <unit>"},
      {"flurb #1", "flurb", "rotate"},
      {"move the along x", "along", "<name>"},
      {"swap #1 #2 #3", "#3", "end of command"},
      {"move #1 10 cm along x @", "@", ""},
      {"rotate #1 90 grad around z", "grad", "deg"},
  };
}

}  // namespace compsim::testing
