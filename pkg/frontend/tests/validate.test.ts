import { describe, expect, it } from "vitest";
import { parseKRange, validateForm, type SweepForm } from "../src/validate.js";

const base: SweepForm = {
  m: "256",
  n: "1024",
  bitwidth: "ternary",
  kRange: "2..8",
  reps: "30",
  threads: "1",
};

describe("parseKRange", () => {
  it("expands lo..hi spans", () => {
    expect(parseKRange("1..4")).toEqual([1, 2, 3, 4]);
    expect(parseKRange(" 3 .. 3 ")).toEqual([3]);
  });

  it("accepts comma lists", () => {
    expect(parseKRange("2,4,8")).toEqual([2, 4, 8]);
    expect(parseKRange("5")).toEqual([5]);
  });

  it("rejects garbage", () => {
    expect(parseKRange("")).toBeNull();
    expect(parseKRange("4..2")).toBeNull();
    expect(parseKRange("a,b")).toBeNull();
    expect(parseKRange("1..x")).toBeNull();
  });
});

describe("validateForm", () => {
  it("passes a sane form and builds the request body", () => {
    const { body, errors } = validateForm(base);
    expect(errors).toEqual([]);
    expect(body).toEqual({
      m: 256, n: 1024, bitwidth: "ternary",
      k_list: [2, 3, 4, 5, 6, 7, 8], reps: 30, threads: 1,
    });
  });

  // the cap mirror: k=20 ternary must die client-side, before any request
  it("rejects k=20 ternary", () => {
    const { body, errors } = validateForm({ ...base, kRange: "20" });
    expect(body).toBeNull();
    expect(errors).toHaveLength(1);
    expect(errors[0].field).toBe("kRange");
    expect(errors[0].message).toContain("k=20");
    expect(errors[0].message).toContain("cap of 10");
  });

  it("rejects k=11 ternary but allows k=16 binary", () => {
    expect(validateForm({ ...base, kRange: "11" }).body).toBeNull();
    const bin = validateForm({ ...base, bitwidth: "binary", kRange: "16" });
    expect(bin.errors).toEqual([]);
    expect(bin.body?.k_list).toEqual([16]);
    expect(validateForm({ ...base, bitwidth: "binary", kRange: "17" }).body).toBeNull();
  });

  it("bounds the shape like the server does", () => {
    expect(validateForm({ ...base, m: "0" }).errors[0].field).toBe("m");
    expect(validateForm({ ...base, n: "16385" }).errors[0].field).toBe("n");
    expect(validateForm({ ...base, m: "16384" }).errors).toEqual([]);
  });

  it("rejects non-integer entries", () => {
    expect(validateForm({ ...base, m: "12.5" }).errors[0].field).toBe("m");
    expect(validateForm({ ...base, reps: "lots" }).errors[0].field).toBe("reps");
  });

  it("collects several errors at once", () => {
    const { errors } = validateForm({ ...base, m: "-1", kRange: "99" });
    expect(errors.map((e) => e.field).sort()).toEqual(["kRange", "m"]);
  });
});
