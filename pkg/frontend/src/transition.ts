// Transition inspection: original next to the rendered frame at the slider's
// lambda, live IoU readout from response headers, sparkline of the stored
// sweep series with drop flags. Slider moves are debounced and the frame
// fetch is latest-wins.

import { Api } from "./api.js";
import { FrameLoader } from "./frames.js";
import { renderSparkline } from "./sparkline.js";
import { RENDER_DEBOUNCE_MS, clampLambda, debounce } from "./state.js";
import type { SweepReport } from "./types.js";

export interface TransitionOptions {
  from?: string;
  focus?: string;
  sweep?: SweepReport;
  debounceMs?: number;
  loader?: FrameLoader;
}

export class TransitionView {
  readonly element: HTMLElement;
  readonly loader: FrameLoader;
  lambda = 0;
  overlay = false;

  private readonly frameImage: HTMLImageElement;
  private readonly originalImage: HTMLImageElement;
  private readonly readout: HTMLElement;
  private readonly status: HTMLElement;
  private readonly requestFrame: (lambda: number) => void;
  private objectUrl: string | null = null;

  constructor(
    private readonly api: Api,
    private readonly run: string,
    private readonly scene: string,
    private readonly to: string,
    private readonly options: TransitionOptions = {},
  ) {
    this.loader = options.loader ?? new FrameLoader();
    this.element = document.createElement("section");
    this.element.className = "transition";
    this.element.innerHTML = `
      <div class="pair">
        <figure><img data-role="original" alt="from variant"><figcaption>${this.fromCondition()}</figcaption></figure>
        <figure><img data-role="frame" alt="interpolated frame"><figcaption data-role="status"></figcaption></figure>
      </div>
      <input type="range" min="0" max="1" step="0.01" value="0" data-role="slider">
      <div class="readout" data-role="readout"></div>
      <label><input type="checkbox" data-role="overlay"> prediction overlay (at endpoints)</label>
    `;
    this.frameImage = this.element.querySelector('[data-role="frame"]')!;
    this.originalImage = this.element.querySelector('[data-role="original"]')!;
    this.readout = this.element.querySelector('[data-role="readout"]')!;
    this.status = this.element.querySelector('[data-role="status"]')!;

    this.originalImage.src = api.variantUrl(run, scene, this.fromCondition());

    const slider = this.element.querySelector<HTMLInputElement>('[data-role="slider"]')!;
    this.requestFrame = debounce(
      (lambda: number) => void this.fetchFrame(lambda),
      options.debounceMs ?? RENDER_DEBOUNCE_MS,
    );
    slider.addEventListener("input", () => {
      this.setLambda(Number(slider.value));
    });
    const overlayToggle =
      this.element.querySelector<HTMLInputElement>('[data-role="overlay"]')!;
    overlayToggle.addEventListener("change", () => {
      this.overlay = overlayToggle.checked;
      this.refreshOverlay();
    });

    if (options.sweep) {
      const spark = document.createElement("div");
      spark.className = "sweep";
      spark.appendChild(renderSparkline(options.sweep.focus_series, options.sweep.drops));
      const flags = document.createElement("span");
      flags.className = "flags";
      flags.textContent = options.sweep.drops
        .map((d) => `${d.kind} at step ${d.step}→${d.step + 1}`)
        .join(", ");
      spark.appendChild(flags);
      this.element.appendChild(spark);
    }
  }

  fromCondition(): string {
    return this.options.from ?? "original";
  }

  setLambda(value: number): void {
    this.lambda = clampLambda(value);
    this.status.textContent = "rendering…";
    this.element.classList.add("pending");
    this.requestFrame(this.lambda);
  }

  /** Immediate fetch (no debounce); used on first show and by tests. */
  async fetchFrame(lambda: number): Promise<void> {
    const url = this.api.renderUrl(this.run, this.scene, {
      from: this.fromCondition(),
      to: this.to,
      lambda,
      focus: this.options.focus,
    });
    const result = await this.loader.load(url);
    if (!result.ok) {
      if (!result.aborted) {
        this.status.textContent = `render failed (${result.status ?? "network"})`;
        this.element.classList.remove("pending");
      }
      return;
    }
    this.element.classList.remove("pending");
    if (this.objectUrl !== null) URL.revokeObjectURL(this.objectUrl);
    this.objectUrl = URL.createObjectURL(new Blob([result.bytes], { type: "image/png" }));
    this.frameImage.src = this.objectUrl;
    this.frameImage.dataset.etag = result.etag ?? "";
    this.status.textContent = `λ = ${lambda}`;
    const parts = [`mean IoU ${result.meanIou ?? "—"}`];
    if (this.options.focus !== undefined) {
      parts.push(`${this.options.focus} IoU ${result.focusIou ?? "—"}`);
    }
    this.readout.dataset.meanIou = String(result.meanIou);
    this.readout.dataset.focusIou = String(result.focusIou);
    this.readout.textContent = parts.join(" · ");
    this.refreshOverlay();
  }

  private refreshOverlay(): void {
    // overlays exist for stored variants, i.e. at the slider endpoints
    if (!this.overlay) return;
    if (this.lambda === 0) {
      this.frameImage.src = this.api.overlayUrl(this.run, this.scene, this.fromCondition());
    } else if (this.lambda === 1) {
      this.frameImage.src = this.api.overlayUrl(this.run, this.scene, this.to);
    }
  }
}
