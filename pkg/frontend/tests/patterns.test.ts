import { describe, expect, it } from "vitest";

import { cycleState, describe as describeStates, initialStates, matchesCode, toQuery } from "../src/patterns.js";

describe("tri-state pattern selector", () => {
  it("exposes exactly 7 toggles, all ignore initially", () => {
    const states = initialStates();
    expect(states).toHaveLength(7);
    expect(states.every((s) => s === "ignore")).toBe(true);
    expect(toQuery(states)).toBeNull();
  });

  it("cycles ignore -> 1 -> 0 -> ignore", () => {
    expect(cycleState("ignore")).toBe("1");
    expect(cycleState("1")).toBe("0");
    expect(cycleState("0")).toBe("ignore");
  });

  it("builds the mask/bits query from constrained toggles only", () => {
    const states = initialStates();
    states[2] = "1";
    states[6] = "0";
    expect(toQuery(states)).toEqual({ mask: "F3,F7", bits: "1,0" });
  });

  it("describes the active constraints", () => {
    const states = initialStates();
    expect(describeStates(states)).toContain("no pattern constraint");
    states[0] = "1";
    expect(describeStates(states)).toBe("F1=1");
  });

  it("matches code strings consistently with the query semantics", () => {
    const states = initialStates();
    states[2] = "1";
    expect(matchesCode(states, "0010000")).toBe(true);
    expect(matchesCode(states, "0000000")).toBe(false);
    expect(matchesCode(states, "101")).toBe(false);
  });
});
