/* tslint:disable */
/* eslint-disable */

export class Demo {
    free(): void;
    [Symbol.dispose](): void;
    height(): number;
    /**
     * Generate a scene. Fails on impossible layouts (too many objects for
     * the canvas).
     */
    constructor(width: number, height: number, mc: number, dc: number, debris: number, seed: number);
    /**
     * Overlay of the last [`Demo::score`] run. Boxes are teal for MC
     * calls, red for DC calls and orange where the call disagrees with
     * ground truth. Before any scoring this is the plain scene.
     */
    overlay_rgba(): Uint8Array;
    scene_rgba(): Uint8Array;
    /**
     * Score the scene and return a JSON summary with the verdict, the
     * call counts and the confusion matrix against ground truth.
     */
    score(t: number, ratio_threshold: number, cutoff_fraction: number): string;
    /**
     * Low-pass filtered scene with the Otsu foreground tinted blue.
     * A cutoff of 0 disables the filter.
     */
    threshold_rgba(cutoff_fraction: number): Uint8Array;
    width(): number;
}

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_demo_free: (a: number, b: number) => void;
    readonly demo_height: (a: number) => number;
    readonly demo_new: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number];
    readonly demo_overlay_rgba: (a: number) => [number, number];
    readonly demo_scene_rgba: (a: number) => [number, number];
    readonly demo_score: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly demo_threshold_rgba: (a: number, b: number) => [number, number, number, number];
    readonly demo_width: (a: number) => number;
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __wbindgen_start: () => void;
}

export type SyncInitInput = BufferSource | WebAssembly.Module;

/**
 * Instantiates the given `module`, which can either be bytes or
 * a precompiled `WebAssembly.Module`.
 *
 * @param {{ module: SyncInitInput }} module - Passing `SyncInitInput` directly is deprecated.
 *
 * @returns {InitOutput}
 */
export function initSync(module: { module: SyncInitInput } | SyncInitInput): InitOutput;

/**
 * If `module_or_path` is {RequestInfo} or {URL}, makes a request and
 * for everything else, calls `WebAssembly.instantiate` directly.
 *
 * @param {{ module_or_path: InitInput | Promise<InitInput> }} module_or_path - Passing `InitInput` directly is deprecated.
 *
 * @returns {Promise<InitOutput>}
 */
export default function __wbg_init (module_or_path?: { module_or_path: InitInput | Promise<InitInput> } | InitInput | Promise<InitInput>): Promise<InitOutput>;
