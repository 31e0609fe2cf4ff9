/* tslint:disable */
/* eslint-disable */

/**
 * One duel. `None` in a policy slot means the page picks that side's
 * actions through [`Fight::choose`].
 */
export class Fight {
    free(): void;
    [Symbol.dispose](): void;
    /**
     * Let the policy in charge of the active creature pick one action.
     */
    advance(): string;
    /**
     * True when the side to act is played from the page.
     */
    awaiting_choice(): boolean;
    /**
     * Apply menu entry `index` for the active creature.
     */
    choose(index: number): string;
    entities_json(): string;
    height(): number;
    is_over(): boolean;
    /**
     * Hand the hero to a trained network (checkpoint JSON text).
     */
    load_checkpoint(json: string): void;
    map_name(): string;
    menu(): string[];
    constructor(map: string, hero_class: string, enemy_class: string, hero: string, enemy: string, seed: bigint);
    /**
     * "hero won", "hero lost", "tie" or "" while the fight runs.
     */
    outcome(): string;
    /**
     * The language-model prompt the active creature would receive.
     */
    prompt(): string;
    /**
     * Per tile, row-major: movement cost in feet to reach it from (x, y)
     * within `feet`, or 255 when out of reach. Other creatures block.
     */
    reachable(x: number, y: number, feet: number): Uint8Array;
    round(): number;
    /**
     * Advance until the page has to choose or the fight ends, at most
     * `limit` actions. Returns one line per action.
     */
    run(limit: number): string[];
    /**
     * Terrain glyphs, one line per row.
     */
    terrain(): string;
    /**
     * Per tile, row-major: 0 clear, 1 half cover, 2 blocked, 3 off the map.
     */
    visibility(x: number, y: number): Uint8Array;
    width(): number;
}

export function class_names(): string[];

export function map_names(): string[];

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_fight_free: (a: number, b: number) => void;
    readonly class_names: () => [number, number];
    readonly fight_advance: (a: number) => [number, number, number, number];
    readonly fight_awaiting_choice: (a: number) => number;
    readonly fight_choose: (a: number, b: number) => [number, number, number, number];
    readonly fight_entities_json: (a: number) => [number, number];
    readonly fight_height: (a: number) => number;
    readonly fight_is_over: (a: number) => number;
    readonly fight_load_checkpoint: (a: number, b: number, c: number) => [number, number];
    readonly fight_map_name: (a: number) => [number, number];
    readonly fight_menu: (a: number) => [number, number];
    readonly fight_new: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: number, i: number, j: number, k: bigint) => [number, number, number];
    readonly fight_outcome: (a: number) => [number, number];
    readonly fight_prompt: (a: number) => [number, number];
    readonly fight_reachable: (a: number, b: number, c: number, d: number) => [number, number];
    readonly fight_round: (a: number) => number;
    readonly fight_run: (a: number, b: number) => [number, number, number, number];
    readonly fight_terrain: (a: number) => [number, number];
    readonly fight_visibility: (a: number, b: number, c: number) => [number, number];
    readonly fight_width: (a: number) => number;
    readonly map_names: () => [number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __externref_drop_slice: (a: number, b: number) => void;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
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
