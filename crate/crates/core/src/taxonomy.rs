//! Built-in category vocabulary: the fourteen default categories, their
//! synonyms for free-text matching, and the sub-topics offered during
//! guided narrowing.

/// A refinement of one category into a narrower direction.
#[derive(Debug, Clone, Copy)]
pub struct Subtopic {
    pub token: &'static str,
    pub label: &'static str,
    /// Lower-case keywords; a corpus title matching any of these belongs to
    /// the sub-topic.
    pub keywords: &'static [&'static str],
}

#[derive(Debug, Clone, Copy)]
pub struct CategoryInfo {
    pub id: &'static str,
    pub display_name: &'static str,
    /// Lower-case words that refer to this category in free text.
    pub synonyms: &'static [&'static str],
    pub subtopics: [Subtopic; 3],
}

macro_rules! sub {
    ($token:expr, $label:expr, [$($kw:expr),* $(,)?]) => {
        Subtopic { token: $token, label: $label, keywords: &[$($kw),*] }
    };
}

pub const DEFAULT_CATEGORIES: [CategoryInfo; 14] = [
    CategoryInfo {
        id: "food",
        display_name: "Food",
        synonyms: &["food", "foods", "recipe", "recipes", "cooking", "restaurant", "restaurants", "eating", "snacks", "baking"],
        subtopics: [
            sub!("home_cooking", "Easy home cooking", ["recipe", "cook", "dinner"]),
            sub!("restaurant_finds", "Restaurant and cafe finds", ["restaurant", "cafe", "brunch"]),
            sub!("baking", "Baking and desserts", ["baking", "cake", "dessert"]),
        ],
    },
    CategoryInfo {
        id: "fashion",
        display_name: "Fashion",
        synonyms: &["fashion", "outfit", "outfits", "clothes", "clothing", "style", "wardrobe"],
        subtopics: [
            sub!("daily_outfits", "Everyday outfit ideas", ["outfit", "daily", "look"]),
            sub!("capsule_wardrobe", "Capsule wardrobe basics", ["capsule", "basics", "wardrobe"]),
            sub!("street_style", "Street style", ["street", "streetwear", "vintage"]),
        ],
    },
    CategoryInfo {
        id: "skincare",
        display_name: "Skincare",
        synonyms: &["skincare", "skin", "makeup", "beauty", "serum", "sunscreen"],
        subtopics: [
            sub!("routines", "Morning and night routines", ["routine", "morning", "night"]),
            sub!("product_reviews", "Product reviews", ["review", "serum", "cream"]),
            sub!("makeup_looks", "Makeup looks", ["makeup", "lip", "eyeliner"]),
        ],
    },
    CategoryInfo {
        id: "travel",
        display_name: "Travel",
        synonyms: &["travel", "trip", "trips", "traveling", "travelling", "vacation", "journey", "destinations"],
        subtopics: [
            sub!("weekend_getaways", "Weekend getaways nearby", ["weekend", "getaway", "nearby"]),
            sub!("trip_planning", "Long-trip planning and itineraries", ["itinerary", "planning", "route"]),
            sub!("vicarious_travel", "Vicarious travel: beautiful photos and stories", ["vicarious", "stories", "scenery"]),
        ],
    },
    CategoryInfo {
        id: "fitness",
        display_name: "Fitness",
        synonyms: &["fitness", "workout", "workouts", "gym", "exercise", "training", "yoga"],
        subtopics: [
            sub!("home_workouts", "Home workouts", ["home", "bodyweight", "minute"]),
            sub!("strength", "Strength training", ["strength", "lifting", "squat"]),
            sub!("yoga_stretch", "Yoga and stretching", ["yoga", "stretch", "flexibility"]),
        ],
    },
    CategoryInfo {
        id: "home_decor",
        display_name: "Home decor",
        synonyms: &["decor", "interior", "interiors", "furniture", "apartment", "room"],
        subtopics: [
            sub!("small_spaces", "Small-space makeovers", ["small", "makeover", "studio"]),
            sub!("plants", "Plants and greenery", ["plant", "green", "balcony"]),
            sub!("diy_decor", "DIY decor projects", ["diy", "handmade", "upcycle"]),
        ],
    },
    CategoryInfo {
        id: "photography",
        display_name: "Photography",
        synonyms: &["photography", "photo", "photos", "camera", "cameras", "shooting", "lens"],
        subtopics: [
            sub!("phone_photography", "Phone photography tips", ["phone", "tips", "edit"]),
            sub!("film_cameras", "Film cameras", ["film", "analog", "roll"]),
            sub!("landscape", "Landscape shots", ["landscape", "sunset", "mountain"]),
        ],
    },
    CategoryInfo {
        id: "technology",
        display_name: "Technology",
        synonyms: &["technology", "tech", "gadget", "gadgets", "laptop", "phones", "apps", "coding"],
        subtopics: [
            sub!("gadget_reviews", "Gadget reviews", ["gadget", "review", "unboxing"]),
            sub!("desk_setups", "Desk setups", ["desk", "setup", "keyboard"]),
            sub!("productivity_apps", "Productivity apps", ["app", "productivity", "workflow"]),
        ],
    },
    CategoryInfo {
        id: "reading",
        display_name: "Reading",
        synonyms: &["reading", "book", "books", "novel", "novels", "literature"],
        subtopics: [
            sub!("book_lists", "Book recommendations", ["list", "recommend", "must-read"]),
            sub!("reading_notes", "Reading notes", ["notes", "quotes", "review"]),
            sub!("bookstores", "Bookstores and reading corners", ["bookstore", "library", "corner"]),
        ],
    },
    CategoryInfo {
        id: "pets",
        display_name: "Pets",
        synonyms: &["pets", "pet", "cat", "cats", "dog", "dogs", "puppy", "kitten"],
        subtopics: [
            sub!("cats", "Cat life", ["cat", "kitten", "meow"]),
            sub!("dogs", "Dog life", ["dog", "puppy", "walk"]),
            sub!("pet_care", "Pet care tips", ["care", "vet", "food"]),
        ],
    },
    CategoryInfo {
        id: "outdoor",
        display_name: "Outdoor activities",
        synonyms: &["outdoor", "outdoors", "hiking", "hike", "camping", "climbing", "cycling", "nature"],
        subtopics: [
            sub!("hiking", "Hiking trails", ["hiking", "trail", "hike"]),
            sub!("camping", "Camping trips", ["camping", "tent", "campfire"]),
            sub!("cycling", "Cycling routes", ["cycling", "bike", "ride"]),
        ],
    },
    CategoryInfo {
        id: "art",
        display_name: "Art",
        synonyms: &["art", "arts", "painting", "drawing", "illustration", "museum", "exhibition"],
        subtopics: [
            sub!("exhibitions", "Exhibitions worth visiting", ["exhibition", "museum", "gallery"]),
            sub!("drawing", "Drawing and illustration", ["drawing", "sketch", "illustration"]),
            sub!("crafts", "Crafts and ceramics", ["ceramic", "craft", "pottery"]),
        ],
    },
    CategoryInfo {
        id: "music",
        display_name: "Music",
        synonyms: &["music", "song", "songs", "playlist", "concert", "concerts", "guitar", "piano"],
        subtopics: [
            sub!("playlists", "Playlists for every mood", ["playlist", "mood", "songs"]),
            sub!("live_shows", "Concerts and live shows", ["concert", "live", "festival"]),
            sub!("instruments", "Learning an instrument", ["instrument", "guitar", "piano"]),
        ],
    },
    CategoryInfo {
        id: "parenting",
        display_name: "Parenting",
        synonyms: &["parenting", "parent", "parents", "baby", "babies", "kids", "toddler", "family"],
        subtopics: [
            sub!("baby_care", "Baby care", ["baby", "newborn", "sleep"]),
            sub!("kids_activities", "Activities with kids", ["kids", "activity", "weekend"]),
            sub!("family_meals", "Family meals", ["meal", "lunchbox", "family"]),
        ],
    },
];

/// Looks up a built-in category by id.
pub fn category_info(id: &str) -> Option<&'static CategoryInfo> {
    DEFAULT_CATEGORIES.iter().find(|c| c.id == id)
}

/// Looks up a sub-topic of a built-in category.
pub fn subtopic(category: &str, token: &str) -> Option<&'static Subtopic> {
    category_info(category)?
        .subtopics
        .iter()
        .find(|s| s.token == token)
}

/// True when `title` mentions any keyword of the given sub-topic.
pub fn title_matches_subtopic(title: &str, category: &str, token: &str) -> bool {
    let Some(sub) = subtopic(category, token) else {
        return false;
    };
    let lower = title.to_lowercase();
    sub.keywords.iter().any(|kw| lower.contains(kw))
}

/// Display name for a category id; unknown ids are echoed back.
pub fn display_name(id: &str) -> String {
    category_info(id)
        .map(|c| c.display_name.to_string())
        .unwrap_or_else(|| id.replace('_', " "))
}
