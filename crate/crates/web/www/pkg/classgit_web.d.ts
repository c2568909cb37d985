/* tslint:disable */
/* eslint-disable */

export class Merge {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    readonly clean: boolean;
    readonly conflicts: number;
    /**
     * Merged text, with conflict markers where the sides disagree.
     */
    readonly text: string;
}

export class Similarity {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    /**
     * "high", "medium", or "distinct".
     */
    readonly band: string;
    readonly score: number;
}

/**
 * Object id of `content` stored as `kind` ("blob", "tree", or "commit").
 */
export function hashObject(kind: string, content: string): string;

export function merge3(base: string, ours: string, theirs: string): Merge;

export function similarity(a: string, b: string): Similarity;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_merge_free: (a: number, b: number) => void;
    readonly __wbg_similarity_free: (a: number, b: number) => void;
    readonly hashObject: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly merge3: (a: number, b: number, c: number, d: number, e: number, f: number) => number;
    readonly merge_clean: (a: number) => number;
    readonly merge_conflicts: (a: number) => number;
    readonly merge_text: (a: number) => [number, number];
    readonly similarity: (a: number, b: number, c: number, d: number) => number;
    readonly similarity_band: (a: number) => [number, number];
    readonly similarity_score: (a: number) => number;
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
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
