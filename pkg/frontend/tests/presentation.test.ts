import { describe, expect, it } from "vitest";
import { TripletItem } from "../src/api";
import { ImageLoader, Presentation, PresentationError } from "../src/presentation";

function item(overrides: Partial<TripletItem> = {}): TripletItem {
  return {
    kind: "triplet",
    triplet_id: "alpha.r0c0.intra_method.000",
    phase: "testing",
    index: 3,
    total: 118,
    reference: "/assets/s/alpha/S_r0c0/REFERENCE.png",
    left: "/assets/s/alpha/S_r0c0/pleno_full5x5_0.5.png",
    right: "/assets/s/alpha/S_r0c0/vvc_full5x5_2.png",
    flicker_ms: 500,
    swapped: false,
    ...overrides,
  };
}

const okLoader: ImageLoader = { load: async (url) => url };

describe("Presentation", () => {
  it("preloads all three stimuli before the clock may start", async () => {
    const loadedUrls: string[] = [];
    const loader: ImageLoader = {
      load: async (url) => {
        loadedUrls.push(url);
        return url;
      },
    };
    let t = 0;
    const p = new Presentation(item(), loader, () => t);
    expect(() => p.begin()).toThrow(PresentationError);
    await p.preload();
    expect(loadedUrls.sort()).toEqual([item().reference, item().left, item().right].sort());
    p.begin();
    expect(p.clock.started).toBe(true);
  });

  it("retries a failing asset once, then aborts with logged incidents", async () => {
    let failures = 0;
    const flaky: ImageLoader = {
      load: async (url) => {
        if (url.includes("pleno") && failures < 1) {
          failures++;
          throw new Error("http 503");
        }
        return url;
      },
    };
    const p = new Presentation(item(), flaky, () => 0);
    await p.preload(); // one failure is absorbed by the retry
    expect(p.incidents.length).toBe(1);

    const broken: ImageLoader = {
      load: async (url) => {
        if (url.includes("vvc")) throw new Error("http 404");
        return url;
      },
    };
    const p2 = new Presentation(item(), broken, () => 0);
    await expect(p2.preload()).rejects.toThrow(/failed to load twice/);
    expect(p2.incidents.length).toBe(2); // first try and the retry
  });

  it("keeps buttons disabled until one full cycle has elapsed", async () => {
    let t = 0;
    const p = new Presentation(item(), okLoader, () => t);
    await p.preload();
    p.begin();

    expect(p.buttonsEnabled()).toBe(false);
    t = 999; // one dwell shy of a full cycle at 500 ms
    expect(p.buttonsEnabled()).toBe(false);
    expect(() => p.latencyMs()).toThrow(/before buttons enabled/);
    t = 1000; // 2 x 500 ms: both stimuli seen once
    expect(p.buttonsEnabled()).toBe(true);
  });

  it("measures latency from the first enabled instant", async () => {
    let t = 0;
    const p = new Presentation(item(), okLoader, () => t);
    await p.preload();
    p.begin();
    t = 1200;
    expect(p.buttonsEnabled()).toBe(true); // first enabled check happens here
    t = 3700;
    expect(p.latencyMs()).toBe(2500);
  });

  it("maps phases to panel images in lockstep", async () => {
    const p = new Presentation(item(), okLoader, () => 0);
    expect(p.panelImages(0)).toEqual({ left: item().left, right: item().right });
    expect(p.panelImages(1)).toEqual({ left: item().reference, right: item().reference });
  });

  it("shows identical static frames for a bias-control payload", () => {
    const ref = "/assets/s/alpha/S_r0c0/REFERENCE.png";
    const p = new Presentation(item({ left: ref, right: ref, reference: ref }), okLoader, () => 0);
    expect(p.panelImages(0)).toEqual({ left: ref, right: ref });
    expect(p.panelImages(1)).toEqual({ left: ref, right: ref }); // no visible change
  });
});
