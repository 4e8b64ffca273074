import { afterEach, describe, expect, it, vi } from "vitest";
import { readFileSync } from "node:fs";
import { join } from "node:path";

import { ApiError, ConsoleApi } from "../src/api.js";

function fixture(name: string): unknown {
  return JSON.parse(readFileSync(join(__dirname, "fixtures", name), "utf-8"));
}

function jsonResponse(body: unknown, status = 200): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}

afterEach(() => {
  vi.unstubAllGlobals();
});

describe("ConsoleApi", () => {
  it("submits turns against the recorded wire shape", async () => {
    const turn = fixture("accepted_turn.json");
    const calls: Array<{ url: string; init?: RequestInit }> = [];
    vi.stubGlobal("fetch", async (url: string, init?: RequestInit) => {
      calls.push({ url, init });
      return jsonResponse(turn);
    });
    const api = new ConsoleApi("http://svc");
    const result = await api.submitTurn("s1", "compensation for parts 4 to 16");
    expect(calls[0].url).toBe("http://svc/sessions/s1/turns");
    expect(JSON.parse(calls[0].init!.body as string)).toEqual({
      query: "compensation for parts 4 to 16",
    });
    expect(result).toEqual(turn);
  });

  it("posts exactly one approval per decision", async () => {
    const approval = fixture("approval.json");
    const posts: string[] = [];
    vi.stubGlobal("fetch", async (url: string, init?: RequestInit) => {
      if (init?.method === "POST") posts.push(url);
      return jsonResponse(approval);
    });
    const api = new ConsoleApi("");
    const result = await api.approve("s1", "turn-1", "approved", "fine");
    expect(posts).toEqual(["/sessions/s1/approvals"]);
    expect(result).toEqual(approval);
  });

  it("raises ApiError with the service detail on conflict", async () => {
    vi.stubGlobal("fetch", async () =>
      jsonResponse({ detail: "turn already has a recorded decision" }, 409));
    const api = new ConsoleApi("");
    await expect(api.approve("s1", "turn-1", "approved"))
      .rejects.toMatchObject({ status: 409 });
    await expect(api.approve("s1", "turn-1", "approved"))
      .rejects.toBeInstanceOf(ApiError);
  });

  it("fetches audit pages with offset and limit", async () => {
    const page = fixture("audit_page.json");
    let requested = "";
    vi.stubGlobal("fetch", async (url: string) => {
      requested = url;
      return jsonResponse(page);
    });
    const api = new ConsoleApi("");
    const result = await api.auditPage("s1", 5, 25);
    expect(requested).toBe("/sessions/s1/audit?offset=5&limit=25");
    expect(result).toEqual(page);
  });

  it("fetches cited triples by id", async () => {
    const triple = fixture("triple.json") as { id: string };
    vi.stubGlobal("fetch", async () => jsonResponse(triple));
    const api = new ConsoleApi("");
    const record = await api.evidence(triple.id);
    expect(record.id).toBe(triple.id);
  });

  it("keeps the status text when the error body is not JSON", async () => {
    vi.stubGlobal("fetch", async () =>
      new Response("plain text", { status: 500, statusText: "Internal Server Error" }));
    const api = new ConsoleApi("");
    await expect(api.createSession()).rejects.toMatchObject({ status: 500 });
  });
});
