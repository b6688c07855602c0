// Minimal typings for the extension APIs this project touches.

declare namespace chrome {
  namespace storage {
    interface StorageArea {
      get(keys?: string | string[] | null): Promise<Record<string, unknown>>
      set(items: Record<string, unknown>): Promise<void>
      remove(keys: string | string[]): Promise<void>
    }
    const local: StorageArea
    const session: StorageArea | undefined
  }

  namespace webNavigation {
    interface NavigationDetails {
      tabId: number
      frameId: number
      url: string
    }
    interface NavigationEvent {
      addListener(callback: (details: NavigationDetails) => void): void
    }
    const onCommitted: NavigationEvent
  }

  namespace tabs {
    function update(tabId: number, props: { url: string }): Promise<unknown>
  }

  namespace action {
    function setBadgeText(details: { tabId?: number; text: string }): Promise<void>
    function setBadgeBackgroundColor(details: { tabId?: number; color: string }): Promise<void>
  }

  namespace runtime {
    function getURL(path: string): string
  }
}
